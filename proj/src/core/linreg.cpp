#include "core/linreg.hpp"

#include <cmath>
#include <limits>

#include "core/common.hpp"
#include "core/dist.hpp"

namespace amf::linreg {

namespace {

constexpr double kRankTolerance = 1e-10;

// Least squares with rank check; returns coefficients and the unscaled
// covariance diag((D'D)^-1) needed for standard errors.
struct LstsqResult {
  Eigen::VectorXd coef;
  Eigen::VectorXd cov_diag;
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;
  double rss = 0.0;
};

LstsqResult lstsq(const Eigen::VectorXd& y, const Eigen::MatrixXd& d,
                  bool with_cov = true) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d);
  qr.setThreshold(kRankTolerance);
  if (qr.rank() < d.cols()) {
    // Pivot order: the first rank() columns are the independent set; report
    // the lowest-index column left out of it.
    const auto& perm = qr.colsPermutation().indices();
    std::vector<bool> independent(static_cast<size_t>(d.cols()), false);
    for (Eigen::Index i = 0; i < qr.rank(); ++i) {
      independent[static_cast<size_t>(perm(i))] = true;
    }
    int offending = -1;
    for (Eigen::Index c = 0; c < d.cols(); ++c) {
      if (!independent[static_cast<size_t>(c)]) {
        offending = static_cast<int>(c);
        break;
      }
    }
    raise(ErrorKind::Numeric,
          "singular design: column " + std::to_string(offending) +
              " is linearly dependent (rank " + std::to_string(qr.rank()) + " of " +
              std::to_string(d.cols()) + ")");
  }

  LstsqResult out;
  out.coef = qr.solve(y);
  out.fitted = d * out.coef;
  out.residuals = y - out.fitted;
  out.rss = out.residuals.squaredNorm();
  if (with_cov) {
    // (D'D)^-1 = P R^-1 R^-T P' from the pivoted QR.
    Eigen::Index k = d.cols();
    Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    Eigen::MatrixXd rinv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::MatrixXd m = rinv * rinv.transpose();
    const auto& perm = qr.colsPermutation().indices();
    out.cov_diag.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) out.cov_diag(perm(i)) = m(i, i);
  }
  return out;
}

}  // namespace

OlsFit ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, bool with_intercept) {
  const int n = static_cast<int>(y.size());
  const int k = static_cast<int>(x.cols());
  if (x.rows() != n) raise(ErrorKind::InvalidArgument, "ols: X rows must match y length");
  const int p = k + (with_intercept ? 1 : 0);
  if (n <= p) {
    raise(ErrorKind::InvalidArgument, "ols: need n > " + std::to_string(p) + ", got n = " +
                                          std::to_string(n));
  }

  Eigen::MatrixXd d(n, p);
  if (with_intercept) {
    d.col(0).setOnes();
    if (k > 0) d.rightCols(k) = x;
  } else {
    d = x;
  }

  LstsqResult ls = lstsq(y, d);

  OlsFit fit;
  fit.with_intercept = with_intercept;
  fit.n = n;
  fit.k = k;
  fit.df = n - p;
  fit.residuals = std::move(ls.residuals);
  fit.fitted = std::move(ls.fitted);
  fit.rss = ls.rss;
  fit.sigma2 = ls.rss / fit.df;

  fit.betas.resize(k);
  fit.std_errs.resize(k);
  fit.t_stats.resize(k);
  fit.p_values.resize(k);
  // A zero standard error happens on exact fits; a nonzero coefficient is
  // then infinitely significant and a zero one carries no evidence.
  auto t_of = [](double b, double se) {
    if (se > 0.0) return b / se;
    if (b == 0.0) return 0.0;
    return b > 0.0 ? std::numeric_limits<double>::infinity()
                   : -std::numeric_limits<double>::infinity();
  };
  int off = with_intercept ? 1 : 0;
  for (int j = 0; j < k; ++j) {
    fit.betas(j) = ls.coef(off + j);
    fit.std_errs(j) = std::sqrt(fit.sigma2 * ls.cov_diag(off + j));
    fit.t_stats(j) = t_of(fit.betas(j), fit.std_errs(j));
    fit.p_values(j) = dist::student_t_two_sided_p(fit.t_stats(j), fit.df);
  }
  if (with_intercept) {
    fit.alpha = ls.coef(0);
    fit.alpha_se = std::sqrt(fit.sigma2 * ls.cov_diag(0));
    fit.alpha_t = t_of(fit.alpha, fit.alpha_se);
    fit.alpha_p = dist::student_t_two_sided_p(fit.alpha_t, fit.df);
  }

  double tss;
  if (with_intercept) {
    double mean = y.mean();
    tss = (y.array() - mean).square().sum();
  } else {
    tss = y.squaredNorm();
  }
  fit.r2 = tss > 0 ? 1.0 - fit.rss / tss : 0.0;
  if (with_intercept) {
    fit.adj_r2 = k > 0 ? 1.0 - (1.0 - fit.r2) * (n - 1) / static_cast<double>(n - k - 1)
                       : 0.0;
  } else {
    fit.adj_r2 = 1.0 - (1.0 - fit.r2) * n / static_cast<double>(n - k);
  }
  return fit;
}

std::vector<int> significant_set(const OlsFit& fit, double level) {
  std::vector<int> out;
  for (int j = 0; j < fit.k; ++j) {
    if (fit.p_values(j) < level) out.push_back(j);
  }
  return out;
}

Eigen::MatrixXd project_out_market(const Eigen::MatrixXd& x, int market_col) {
  if (market_col < 0 || market_col >= x.cols()) {
    raise(ErrorKind::InvalidArgument, "project_out_market: market column out of range");
  }
  Eigen::VectorXd m = x.col(market_col);
  double norm2 = m.squaredNorm();
  if (norm2 <= 0.0) {
    raise(ErrorKind::Numeric, "project_out_market: market column has zero norm");
  }
  Eigen::MatrixXd out = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (j == market_col) continue;
    out.col(j) -= m * (m.dot(x.col(j)) / norm2);
  }
  return out;
}

AnovaResult anova_nested(const Eigen::VectorXd& y, const Eigen::MatrixXd& x_restricted,
                         const Eigen::MatrixXd& x_full) {
  const int n = static_cast<int>(y.size());
  if (x_restricted.rows() != n || x_full.rows() != n) {
    raise(ErrorKind::InvalidArgument, "anova_nested: design rows must match y");
  }
  // Nesting check: every restricted column appears verbatim in the full design.
  for (Eigen::Index j = 0; j < x_restricted.cols(); ++j) {
    bool found = false;
    for (Eigen::Index c = 0; c < x_full.cols() && !found; ++c) {
      found = (x_restricted.col(j) - x_full.col(c)).isZero(0.0);
    }
    if (!found) {
      raise(ErrorKind::InvalidArgument,
            "anova_nested: restricted column " + std::to_string(j) +
                " is not a column of the full design");
    }
  }
  int df_diff = static_cast<int>(x_full.cols() - x_restricted.cols());
  if (df_diff <= 0) {
    raise(ErrorKind::InvalidArgument, "anova_nested: full design must add columns");
  }
  if (n <= x_full.cols()) {
    raise(ErrorKind::InvalidArgument, "anova_nested: need n > full design width");
  }

  LstsqResult restricted = lstsq(y, x_restricted, /*with_cov=*/false);
  LstsqResult full = lstsq(y, x_full, /*with_cov=*/false);

  AnovaResult out;
  out.res_df_1 = n - static_cast<int>(x_restricted.cols());
  out.res_df_2 = n - static_cast<int>(x_full.cols());
  out.rss_1 = restricted.rss;
  out.rss_2 = full.rss;
  out.df_diff = df_diff;
  out.sum_sq_diff = out.rss_1 - out.rss_2;
  out.f_stat = (out.sum_sq_diff / df_diff) / (out.rss_2 / out.res_df_2);
  out.p_value = dist::f_sf(out.f_stat, df_diff, out.res_df_2);
  return out;
}

}  // namespace amf::linreg
