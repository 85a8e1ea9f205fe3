#include <doctest.h>

#include <cmath>

#include "core/common.hpp"
#include "core/dist.hpp"
#include "core/linreg.hpp"
#include "core/rng.hpp"
#include "oracles.hpp"

using namespace amf;

TEST_CASE("distribution tails match quadrature oracles") {
  for (double df : {1.0, 3.0, 7.5, 30.0, 150.0}) {
    for (double t : {-4.0, -1.2, 0.0, 0.5, 2.3, 6.0}) {
      CHECK(dist::student_t_sf(t, df) ==
            doctest::Approx(oracles::student_t_sf_quadrature(t, df)).epsilon(1e-9));
    }
  }
  for (auto [d1, d2] : std::vector<std::pair<double, double>>{{1, 5}, {3, 12}, {9, 64}, {2, 300}}) {
    for (double f : {0.1, 0.9, 2.4, 8.0}) {
      CHECK(dist::f_sf(f, d1, d2) ==
            doctest::Approx(oracles::f_sf_quadrature(f, d1, d2)).epsilon(1e-9));
    }
  }
  CHECK(dist::normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(dist::normal_cdf(1.959963985) == doctest::Approx(0.975).epsilon(1e-8));

  // limits and domain guards
  CHECK(dist::student_t_sf(std::numeric_limits<double>::infinity(), 5.0) == 0.0);
  CHECK(dist::student_t_sf(-std::numeric_limits<double>::infinity(), 5.0) == 1.0);
  CHECK(dist::f_sf(0.0, 3.0, 10.0) == 1.0);
  CHECK(dist::f_sf(std::numeric_limits<double>::infinity(), 3.0, 10.0) == 0.0);
  CHECK_THROWS_AS(dist::student_t_sf(1.0, 0.0), Error);
  CHECK_THROWS_AS(dist::ibeta(-1.0, 2.0, 0.5), Error);
}

TEST_CASE("ols: exact line has alpha 0, beta 1, R^2 1") {
  Eigen::VectorXd y(3), x(3);
  y << 1, 2, 3;
  x << 1, 2, 3;
  auto fit = linreg::ols(y, x, true);
  CHECK(fit.alpha == doctest::Approx(0.0));
  CHECK(fit.betas(0) == doctest::Approx(1.0));
  CHECK(fit.r2 == doctest::Approx(1.0));
}

TEST_CASE("ols: 6x2 fixed design matches the normal-equations oracle to 1e-10") {
  Eigen::MatrixXd x(6, 2);
  x << 1.0, 0.5, 2.0, -1.0, 3.0, 0.25, 4.0, 2.0, 5.0, -0.75, 6.0, 1.5;
  Eigen::VectorXd y(6);
  y << 2.1, 3.9, 6.2, 8.4, 9.8, 12.3;

  auto fit = linreg::ols(y, x, true);
  auto oracle = oracles::ols_normal_equations(y, x, true);
  CHECK(fit.alpha == doctest::Approx(oracle.coef(0)).epsilon(1e-10));
  CHECK(fit.betas(0) == doctest::Approx(oracle.coef(1)).epsilon(1e-10));
  CHECK(fit.betas(1) == doctest::Approx(oracle.coef(2)).epsilon(1e-10));
  CHECK(fit.alpha_se == doctest::Approx(oracle.std_errs(0)).epsilon(1e-10));
  CHECK(fit.std_errs(0) == doctest::Approx(oracle.std_errs(1)).epsilon(1e-10));
  CHECK(fit.std_errs(1) == doctest::Approx(oracle.std_errs(2)).epsilon(1e-10));
  CHECK(fit.rss == doctest::Approx(oracle.rss).epsilon(1e-10));
  // p-values flow through the oracle-verified t tail
  double expected_p = 2.0 * oracles::student_t_sf_quadrature(
                                std::fabs(fit.betas(0) / fit.std_errs(0)), fit.df);
  CHECK(fit.p_values(0) == doctest::Approx(expected_p).epsilon(1e-8));
}

TEST_CASE("ols: null Monte Carlo keeps the false-positive rate near level") {
  // Independent noise in and out: P(p < 0.05) should be 5%; over 500 seeded
  // trials the pass rate must stay above 90%.
  int above = 0;
  for (int trial = 0; trial < 500; ++trial) {
    Rng rng(1000 + static_cast<uint64_t>(trial));
    Eigen::VectorXd y(200), x(200);
    for (int i = 0; i < 200; ++i) {
      y(i) = rng.normal();
      x(i) = rng.normal();
    }
    auto fit = linreg::ols(y, x, true);
    if (fit.p_values(0) > 0.05) ++above;
  }
  CHECK(above >= 450);
}

TEST_CASE("ols: residuals orthogonal to the design, adjusted R^2 below R^2") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    int n = 40 + static_cast<int>(rng.uniform_int(30));
    int k = 1 + static_cast<int>(rng.uniform_int(5));
    Eigen::MatrixXd x(n, k);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      y(i) = rng.normal();
      for (int j = 0; j < k; ++j) x(i, j) = rng.normal();
    }
    auto fit = linreg::ols(y, x, true);
    for (int j = 0; j < k; ++j) {
      double dot = std::fabs(x.col(j).dot(fit.residuals));
      CHECK(dot < 1e-8 * x.col(j).norm() * std::max(fit.residuals.norm(), 1e-12));
    }
    CHECK(std::fabs(fit.residuals.sum()) < 1e-8 * fit.residuals.norm() * std::sqrt(n));
    CHECK(fit.adj_r2 <= fit.r2 + 1e-15);
    // adj_r2 identity from the spec'd formula
    double expected =
        1.0 - (1.0 - fit.r2) * (n - 1) / static_cast<double>(n - k - 1);
    CHECK(fit.adj_r2 == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("ols: rank-deficient design names the dependent column") {
  Eigen::MatrixXd x(10, 3);
  Rng rng(8);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    x(i, 2) = 2.0 * x(i, 0);  // exact duplicate direction
  }
  Eigen::VectorXd y = Eigen::VectorXd::Ones(10);
  try {
    linreg::ols(y, x, true);
    FAIL("expected singular-design error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numeric);
    CHECK(std::string(e.what()).find("column") != std::string::npos);
  }
}

TEST_CASE("significant_set") {
  SUBCASE("nothing significant / perfect predictor") {
    Rng rng(12);
    Eigen::VectorXd y(60), x(60);
    for (int i = 0; i < 60; ++i) {
      x(i) = rng.normal();
      y(i) = 3.0 * x(i);  // exact fit: p ~ 0
    }
    auto exact = linreg::ols(y, x, true);
    CHECK(linreg::significant_set(exact) == std::vector<int>{0});

    linreg::OlsFit fake = exact;
    fake.p_values.setConstant(0.5);
    CHECK(linreg::significant_set(fake).empty());
  }

  SUBCASE("3 true + 5 noise columns at n=156: full power, calibrated noise") {
    // All three true columns must be flagged in >=95% of trials. Demanding
    // zero false positives as well is unattainable at the 5% level (five
    // null columns pass clean only ~0.95^5 = 77% of the time), so the noise
    // columns get a separate calibration band around 5%.
    int all_true = 0, noise_hits = 0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial) {
      Rng rng(4000 + static_cast<uint64_t>(trial));
      const int n = 156, p = 8;
      Eigen::MatrixXd x(n, p);
      Eigen::VectorXd y(n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
        y(i) = x(i, 0) - 0.8 * x(i, 1) + 0.6 * x(i, 2) + 0.5 * rng.normal();
      }
      auto fit = linreg::ols(y, x, true);
      auto sig = linreg::significant_set(fit);
      bool found[3] = {false, false, false};
      for (int j : sig) {
        if (j < 3) found[j] = true;
        else ++noise_hits;
      }
      if (found[0] && found[1] && found[2]) ++all_true;
    }
    CHECK(all_true >= static_cast<int>(0.95 * trials));
    double fp_rate = noise_hits / (5.0 * trials);  // 500 null coefficients
    CHECK(fp_rate > 0.01);
    CHECK(fp_rate < 0.10);
  }
}

TEST_CASE("project_out_market") {
  Rng rng(77);
  const int n = 20;
  Eigen::MatrixXd x(n, 5);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 5; ++j) x(i, j) = rng.normal();
  }

  SUBCASE("column proportional to the market maps to zero") {
    Eigen::MatrixXd m = x;
    m.col(2) = 3.5 * m.col(0);
    auto out = linreg::project_out_market(m, 0);
    CHECK(out.col(2).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((out.col(0) - m.col(0)).cwiseAbs().maxCoeff() == 0.0);  // market untouched
  }

  SUBCASE("column orthogonal to the market is a fixed point") {
    Eigen::MatrixXd m = x;
    // make col 1 exactly orthogonal to col 0 first
    m.col(1) -= m.col(0) * (m.col(0).dot(m.col(1)) / m.col(0).squaredNorm());
    Eigen::VectorXd before = m.col(1);
    auto out = linreg::project_out_market(m, 0);
    CHECK((out.col(1) - before).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("idempotence on a random 20x5 matrix") {
    auto once = linreg::project_out_market(x, 0);
    auto twice = linreg::project_out_market(once, 0);
    CHECK((once - twice).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("projected columns are uncorrelated with a centered market") {
    // With a mean-zero market column, orthogonality equals zero correlation.
    Eigen::MatrixXd m = x;
    m.col(0).array() -= m.col(0).mean();
    auto out = linreg::project_out_market(m, 0);
    for (int j = 1; j < 5; ++j) {
      Eigen::VectorXd a = out.col(j).array() - out.col(j).mean();
      Eigen::VectorXd b = m.col(0);
      double corr = a.dot(b) / (a.norm() * b.norm());
      CHECK(std::fabs(corr) < 1e-8);
    }
  }

  SUBCASE("zero market column is an error") {
    Eigen::MatrixXd m = x;
    m.col(0).setZero();
    CHECK_THROWS_AS(linreg::project_out_market(m, 0), Error);
  }
}

TEST_CASE("anova_nested: preconditions and RSS behavior") {
  Rng rng(90);
  const int n = 60;
  Eigen::MatrixXd x_full(n, 4);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) x_full(i, j) = rng.normal();
    y(i) = 0.7 * x_full(i, 0) + rng.normal();
  }
  Eigen::MatrixXd x_restricted = x_full.leftCols(2);

  auto res = linreg::anova_nested(y, x_restricted, x_full);
  CHECK(res.df_diff == 2);
  CHECK(res.res_df_1 == n - 2);
  CHECK(res.res_df_2 == n - 4);
  CHECK(res.rss_2 <= res.rss_1 + 1e-12 * res.rss_1);
  CHECK(res.sum_sq_diff == doctest::Approx(res.rss_1 - res.rss_2));

  SUBCASE("identical designs violate the nesting precondition") {
    CHECK_THROWS_AS(linreg::anova_nested(y, x_full, x_full), Error);
  }
  SUBCASE("restricted columns must appear in the full design") {
    Eigen::MatrixXd other = x_restricted;
    other(0, 0) += 1e-3;
    CHECK_THROWS_AS(linreg::anova_nested(y, other, x_full), Error);
  }
  SUBCASE("adding any column never increases RSS_2") {
    Eigen::MatrixXd wider(n, 5);
    wider.leftCols(4) = x_full;
    for (int i = 0; i < n; ++i) wider(i, 4) = rng.normal();
    auto wide_res = linreg::anova_nested(y, x_restricted, wider);
    CHECK(wide_res.rss_2 <= res.rss_2 + 1e-12);
  }
  SUBCASE("interaction collinear with base columns is a rank error") {
    Eigen::MatrixXd bad(n, 5);
    bad.leftCols(4) = x_full;
    bad.col(4) = x_full.col(1);
    CHECK_THROWS_AS(linreg::anova_nested(y, x_restricted, bad), Error);
  }
}

TEST_CASE("anova_nested: F p-value against the quadrature oracle and power") {
  Rng rng(91);
  const int n = 80;
  Eigen::MatrixXd x_full(n, 3);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) x_full(i, j) = rng.normal();
    y(i) = x_full(i, 0) + rng.normal();
  }
  auto res = linreg::anova_nested(y, x_full.leftCols(1), x_full);
  CHECK(res.p_value ==
        doctest::Approx(oracles::f_sf_quadrature(res.f_stat, res.df_diff, res.res_df_2))
            .epsilon(1e-8));

  // strong signal on the added columns -> tiny p
  Eigen::VectorXd y2 = y + 5.0 * x_full.col(1);
  auto res2 = linreg::anova_nested(y2, x_full.leftCols(1), x_full);
  CHECK(res2.p_value < 1e-3);
}
