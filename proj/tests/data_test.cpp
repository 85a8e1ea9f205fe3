#include <doctest.h>

#include <set>

#include "core/common.hpp"
#include "core/linreg.hpp"
#include "core/panel.hpp"
#include "core/synth.hpp"
#include "core/taxonomy.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace amf;
using test_util::TempDir;

namespace {

const char* kMetaTwoAssets =
    "asset_id,kind,share_code,exchange_code,etf_class,etf_subclass\n"
    "AAA,Stock,10,1,,\n"
    "BBB,Stock,11,2,,\n";

}  // namespace

TEST_CASE("dates: ISO parsing, serial round trip, half-year buckets") {
  CHECK(parse_date("2012-02-29") == Date{2012, 2, 29});  // leap day
  CHECK_THROWS_AS(parse_date("2013-02-29"), Error);
  CHECK_THROWS_AS(parse_date("2013-13-01"), Error);
  CHECK_THROWS_AS(parse_date("2013/01/01"), Error);
  CHECK_THROWS_AS(parse_date("13-01-01"), Error);
  CHECK(parse_date("2013-01-04").to_string() == "2013-01-04");

  // serial round trip across year and leap boundaries
  Date d{2011, 12, 30};
  for (int w = 0; w < 120; ++w) {
    Date next = d.plus_weeks(w);
    CHECK(Date::from_serial(next.serial()) == next);
    CHECK(next.plus_weeks(1).serial() - next.serial() == 7);
  }

  CHECK(half_year_bucket(Date{2012, 6, 30}) == "2012H1");
  CHECK(half_year_bucket(Date{2012, 7, 1}) == "2012H2");
  CHECK(half_year_bucket(Date{2012, 12, 31}) == "2012H2");
  CHECK(half_year_bucket(Date{2013, 1, 1}) == "2013H1");
}

TEST_CASE("load_panel: complete long-format file gives a dense panel") {
  TempDir tmp("load_dense");
  test_util::write_file(tmp.file("meta.csv"), kMetaTwoAssets);
  test_util::write_file(tmp.file("returns.csv"),
                        "date,asset_id,ret\n"
                        "2010-01-08,AAA,0.01\n"
                        "2010-01-08,BBB,0.02\n"
                        "2010-01-15,AAA,-0.01\n"
                        "2010-01-15,BBB,0.00\n"
                        "2010-01-22,AAA,0.03\n"
                        "2010-01-22,BBB,0.04\n");
  auto panel = data::load_panel(tmp.file("returns.csv"), tmp.file("meta.csv"));
  CHECK(panel.n_weeks() == 3);
  CHECK(panel.n_assets() == 2);
  for (int t = 0; t < 3; ++t) {
    for (int c = 0; c < 2; ++c) CHECK(panel.observed(t, c));
  }
  CHECK(panel.ret(2, panel.column_of("BBB")) == doctest::Approx(0.04));
}

TEST_CASE("load_panel: an absent row stays a missing cell") {
  TempDir tmp("load_hole");
  test_util::write_file(tmp.file("meta.csv"), kMetaTwoAssets);
  test_util::write_file(tmp.file("returns.csv"),
                        "date,asset_id,ret\n"
                        "2010-01-08,AAA,0.01\n"
                        "2010-01-08,BBB,0.02\n"
                        "2010-01-15,AAA,-0.01\n"
                        "2010-01-22,AAA,0.03\n"
                        "2010-01-22,BBB,0.04\n");
  auto panel = data::load_panel(tmp.file("returns.csv"), tmp.file("meta.csv"));
  CHECK_FALSE(panel.observed(1, panel.column_of("BBB")));
  CHECK(panel.observed(1, panel.column_of("AAA")));
}

TEST_CASE("load_panel: delisting return becomes the asset's final observation") {
  TempDir tmp("load_delist");
  test_util::write_file(tmp.file("meta.csv"), kMetaTwoAssets);
  test_util::write_file(tmp.file("returns.csv"),
                        "date,asset_id,ret,delist_ret\n"
                        "2010-01-08,AAA,0.01,\n"
                        "2010-01-15,AAA,0.02,\n"
                        "2010-01-22,AAA,,-0.30\n"
                        "2010-01-08,BBB,0.01,\n"
                        "2010-01-15,BBB,0.01,\n"
                        "2010-01-22,BBB,0.01,\n");
  auto panel = data::load_panel(tmp.file("returns.csv"), tmp.file("meta.csv"));
  int col = panel.column_of("AAA");
  CHECK(panel.ret(2, col) == doctest::Approx(-0.30));
  CHECK(panel.delist_return("AAA").value() == doctest::Approx(-0.30));
  // series length = pre-delist length + 1
  CHECK(panel.observed_count(col, 0, 2) == 3);

  SUBCASE("observations after the delisting return are rejected") {
    test_util::write_file(tmp.file("bad.csv"),
                          "date,asset_id,ret,delist_ret\n"
                          "2010-01-08,AAA,,-0.30\n"
                          "2010-01-15,AAA,0.02,\n"
                          "2010-01-15,BBB,0.01,\n");
    CHECK_THROWS_AS(data::load_panel(tmp.file("bad.csv"), tmp.file("meta.csv")), Error);
  }
}

TEST_CASE("load_panel: tolerates CRLF line endings") {
  TempDir tmp("load_crlf");
  test_util::write_file(tmp.file("meta.csv"),
                        "asset_id,kind,share_code,exchange_code,etf_class,etf_subclass\r\n"
                        "AAA,Stock,10,1,,\r\n");
  test_util::write_file(tmp.file("returns.csv"),
                        "date,asset_id,ret\r\n"
                        "2010-01-08,AAA,0.0125\r\n"
                        "2010-01-15,AAA,-0.004\r\n");
  auto panel = data::load_panel(tmp.file("returns.csv"), tmp.file("meta.csv"));
  CHECK(panel.n_weeks() == 2);
  CHECK(panel.ret(0, 0) == doctest::Approx(0.0125));
  CHECK(panel.ret(1, 0) == doctest::Approx(-0.004));
}

TEST_CASE("load_panel: error paths carry context") {
  TempDir tmp("load_errors");
  test_util::write_file(tmp.file("meta.csv"), kMetaTwoAssets);

  SUBCASE("malformed number names the line") {
    test_util::write_file(tmp.file("returns.csv"),
                          "date,asset_id,ret\n2010-01-08,AAA,zap\n");
    try {
      data::load_panel(tmp.file("returns.csv"), tmp.file("meta.csv"));
      FAIL("expected parse error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Parse);
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
  }
  SUBCASE("asset missing from meta is a referential error") {
    test_util::write_file(tmp.file("returns.csv"),
                          "date,asset_id,ret\n2010-01-08,ZZZ,0.01\n");
    try {
      data::load_panel(tmp.file("returns.csv"), tmp.file("meta.csv"));
      FAIL("expected data error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Data);
    }
  }
  SUBCASE("duplicate (date, asset) is a conflict") {
    test_util::write_file(tmp.file("returns.csv"),
                          "date,asset_id,ret\n"
                          "2010-01-08,AAA,0.01\n"
                          "2010-01-08,AAA,0.02\n");
    CHECK_THROWS_AS(data::load_panel(tmp.file("returns.csv"), tmp.file("meta.csv")), Error);
  }
}

TEST_CASE("merge_factors: factor columns recover published excess values") {
  TempDir tmp("factors");
  test_util::write_file(tmp.file("meta.csv"), kMetaTwoAssets);
  test_util::write_file(tmp.file("returns.csv"),
                        "date,asset_id,ret\n"
                        "2010-01-08,AAA,0.01\n"
                        "2010-01-15,AAA,0.01\n");
  test_util::write_file(tmp.file("factors.csv"),
                        "date,mkt_rf,smb,hml,rmw,cma,rf\n"
                        "2010-01-08,0.004,0.001,-0.002,0.0005,-0.0005,0.001\n"
                        "2010-01-15,-0.006,0.002,0.001,0.0,0.0002,0.001\n");
  auto panel = data::load_panel(tmp.file("returns.csv"), tmp.file("meta.csv"));
  data::merge_factors(panel, tmp.file("factors.csv"));
  CHECK(panel.risk_free(0) == doctest::Approx(0.001));
  auto x = panel.excess_returns(std::vector<std::string>{"MKT_RF", "CMA"}, 0, 1);
  CHECK(x(0, 0) == doctest::Approx(0.004));
  CHECK(x(1, 0) == doctest::Approx(-0.006));
  CHECK(x(1, 1) == doctest::Approx(0.0002));

  SUBCASE("a panel date without a factor row is an error") {
    test_util::write_file(tmp.file("short.csv"),
                          "date,mkt_rf,smb,hml,rmw,cma,rf\n"
                          "2010-01-08,0.004,0.001,-0.002,0.0005,-0.0005,0.001\n");
    auto p2 = data::load_panel(tmp.file("returns.csv"), tmp.file("meta.csv"));
    CHECK_THROWS_AS(data::merge_factors(p2, tmp.file("short.csv")), Error);
  }
}

TEST_CASE("excess_returns: subtraction, identity and an element-wise oracle") {
  Eigen::MatrixXd r(2, 2);
  r << 0.010, 0.004, 0.0013, -0.02;
  auto panel = test_util::make_panel(2, {test_util::stock("A"), test_util::stock("B")}, r,
                                     /*rf=*/0.001);
  auto y = panel.excess_returns(std::vector<std::string>{"A", "B"}, 0, 1);
  CHECK(y(0, 0) == doctest::Approx(0.009));

  // identity case: R == r0 everywhere gives a zero matrix
  Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(2, 2, 0.001);
  auto panel_flat = test_util::make_panel(2, {test_util::stock("A"), test_util::stock("B")},
                                          flat, 0.001);
  auto y0 = panel_flat.excess_returns(std::vector<std::string>{"A", "B"}, 0, 1);
  CHECK(y0.cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  // random 2x2 panel matches direct element-wise recomputation
  Rng rng(11);
  Eigen::MatrixXd rnd(2, 2);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) rnd(i, j) = rng.normal(0.0, 0.02);
  }
  auto panel_rnd =
      test_util::make_panel(2, {test_util::stock("A"), test_util::stock("B")}, rnd, 0.0007);
  auto yr = panel_rnd.excess_returns(std::vector<std::string>{"A", "B"}, 0, 1);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) CHECK(yr(i, j) == doctest::Approx(rnd(i, j) - 0.0007));
  }

  // holes stay holes
  panel.set_ret(0, 0, std::numeric_limits<double>::quiet_NaN());
  auto yh = panel.excess_returns(std::vector<std::string>{"A"}, 0, 1);
  CHECK(std::isnan(yh(0, 0)));

  // a missing risk-free entry is a data error
  panel.set_ret(1, panel.risk_free_col(), std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(panel.excess_returns(std::vector<std::string>{"B"}, 0, 1), Error);
}

TEST_CASE("build_universe: share codes, exchanges and the 80% rule") {
  const int weeks = 160;
  // Stock A fully observed; stock B observed 40/52 of the trailing year;
  // stock C wrong share code; ETF D complete; ETF E has one hole.
  std::vector<data::AssetMeta> assets = {
      test_util::stock("A", 10, 1), test_util::stock("B", 11, 2),
      test_util::stock("C", 14, 1), test_util::etf("D", "Government Bonds"),
      test_util::etf("E", "Currency")};
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(weeks, 5, 0.01);
  auto panel = test_util::make_panel(weeks, assets, r);
  int idx = weeks - 1;
  int b = panel.column_of("B");
  // blank out 12 of the trailing 52 weeks for B -> 40/52 = 76.9% < 80%
  for (int k = 0; k < 12; ++k) {
    panel.set_ret(idx - k, b, std::numeric_limits<double>::quiet_NaN());
  }
  panel.set_ret(idx - 100, panel.column_of("E"), std::numeric_limits<double>::quiet_NaN());

  auto snap = data::build_universe(panel, panel.calendar().at(idx));
  CHECK(snap.eligible_stocks == std::set<std::string>{"A"});
  CHECK(snap.eligible_etfs == std::set<std::string>{"D"});

  SUBCASE("42 of 52 observations meets the 80% rule") {
    auto panel2 = test_util::make_panel(weeks, assets, r);
    for (int k = 0; k < 10; ++k) {
      panel2.set_ret(idx - k, b, std::numeric_limits<double>::quiet_NaN());
    }
    auto snap2 = data::build_universe(panel2, panel2.calendar().at(idx));
    CHECK(snap2.eligible_stocks.count("B") == 1);
  }
  SUBCASE("insufficient history is a window error") {
    CHECK_THROWS_AS(data::build_universe(panel, panel.calendar().at(100)), Error);
  }
}

TEST_CASE("build_universe: top-N capitalization cut and monotonicity") {
  const int weeks = 160;
  std::vector<data::AssetMeta> assets;
  for (int i = 0; i < 6; ++i) assets.push_back(test_util::stock("S" + std::to_string(i)));
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(weeks, 6, 0.01);
  auto panel = test_util::make_panel(weeks, assets, r);
  Eigen::MatrixXd caps = Eigen::MatrixXd::Zero(weeks, panel.n_assets());
  for (int t = 0; t < weeks; ++t) {
    for (int i = 0; i < 6; ++i) caps(t, i) = 100.0 - i;  // S0 largest
  }
  panel.set_market_cap(caps);

  data::UniverseFilters filters;
  filters.top_n_by_cap = 3;
  auto snap = data::build_universe(panel, panel.calendar().at(weeks - 1), filters);
  CHECK(snap.eligible_stocks == std::set<std::string>{"S0", "S1", "S2"});
  // the rank-(N+1) stock is excluded
  CHECK(snap.eligible_stocks.count("S3") == 0);

  // shrinking the cutoff never adds a stock
  std::set<std::string> previous;
  for (int top_n = 1; top_n <= 6; ++top_n) {
    filters.top_n_by_cap = top_n;
    auto s = data::build_universe(panel, panel.calendar().at(weeks - 1), filters);
    for (const auto& id : previous) CHECK(s.eligible_stocks.count(id) == 1);
    previous = s.eligible_stocks;
  }
}

TEST_CASE("merged_class: class and merge lookups") {
  const auto& tax = data::EtfTaxonomy::builtin();
  CHECK(tax.merged_class("Government Bonds") == "Bonds");
  CHECK(tax.merged_class("Corporate Bonds") == "Bonds");
  CHECK(tax.merged_class("Consumer Staples Equities") == "Consumer Equities");
  CHECK(tax.merged_class("Materials") == "Materials & Precious Metals");
  CHECK(tax.merged_class("Currency") == "Currency");  // unmerged maps to itself
  CHECK_THROWS_AS(tax.merged_class("Meme Stocks"), Error);

  // 10 classes, 73 subclasses, every subclass mapped (total function)
  CHECK(tax.all_classes().size() == 10);
  CHECK(tax.entries().size() == 73);
  for (const auto& e : tax.entries()) CHECK_FALSE(tax.merged_class(e.subclass).empty());
}

TEST_CASE("taxonomy: CSV fixture round-trips the builtin table") {
  TempDir tmp("taxonomy");
  const auto& tax = data::EtfTaxonomy::builtin();
  tax.write_csv(tmp.file("etf_taxonomy.csv"));
  auto loaded = data::EtfTaxonomy::load_csv(tmp.file("etf_taxonomy.csv"));
  REQUIRE(loaded.entries().size() == tax.entries().size());
  for (size_t i = 0; i < tax.entries().size(); ++i) {
    CHECK(loaded.entries()[i].etf_class == tax.entries()[i].etf_class);
    CHECK(loaded.entries()[i].subclass == tax.entries()[i].subclass);
    CHECK(loaded.entries()[i].merged_class == tax.entries()[i].merged_class);
  }
}

TEST_CASE("generate_synthetic_market: determinism and spec guards") {
  data::SynthSpec spec;
  spec.weeks = 60;
  spec.n_stocks = 10;
  spec.n_etfs = 8;
  spec.k_factors = 3;
  auto a = data::generate_synthetic_market(spec, 123);
  auto b = data::generate_synthetic_market(spec, 123);
  CHECK(a.panel.returns() == b.panel.returns());
  auto c = data::generate_synthetic_market(spec, 124);
  CHECK(a.panel.returns() != c.panel.returns());

  data::SynthSpec bad = spec;
  bad.k_factors = 9;  // exceeds the ETF count
  CHECK_THROWS_AS(data::generate_synthetic_market(bad, 1), Error);
}

TEST_CASE("generate_synthetic_market: noiseless stocks are exact factor combinations") {
  data::SynthSpec spec;
  spec.weeks = 80;
  spec.n_stocks = 6;
  spec.n_etfs = 6;
  spec.k_factors = 3;
  spec.noise_stock = 0.0;
  spec.noise_etf = 0.0;
  auto market = data::generate_synthetic_market(spec, 5);
  const auto& panel = market.panel;

  int checked = 0;
  for (const auto& st : market.truth.stocks) {
    // Regress the stock's excess return on pure proxies of its true factors
    // (the market column stands in for factor 0): adjusted R^2 must be 1.
    std::vector<std::string> proxy_ids;
    bool all_found = true;
    for (int f : st.factors) {
      if (f == 0) {
        proxy_ids.push_back(data::kMarketId);
        continue;
      }
      bool found = false;
      for (const auto& et : market.truth.etfs) {
        if (et.primary_factor == f && !et.secondary_factor) {
          proxy_ids.push_back(et.asset_id);
          found = true;
          break;
        }
      }
      all_found = all_found && found;
    }
    if (!all_found) continue;  // factor without a pure proxy under this seed
    auto y = panel.excess_returns(std::vector<std::string>{st.asset_id}, 0, spec.weeks - 1);
    auto x = panel.excess_returns(proxy_ids, 0, spec.weeks - 1);
    auto fit = linreg::ols(y.col(0), x, true);
    CHECK(fit.adj_r2 == doctest::Approx(1.0).epsilon(1e-10));
    ++checked;
  }
  CHECK(checked >= 3);  // the fixed seed leaves enough pure-proxy stocks
}

TEST_CASE("generate_synthetic_market: every factor has a strong ETF proxy") {
  data::SynthSpec spec;
  spec.weeks = 156;
  spec.n_stocks = 4;
  spec.n_etfs = 20;
  spec.k_factors = 3;
  auto market = data::generate_synthetic_market(spec, 99);
  const auto& panel = market.panel;

  for (int j = 0; j < spec.k_factors; ++j) {
    // Reference series for factor j: the market column for j = 0, otherwise
    // a pure (no-secondary) proxy reconstructs the factor up to scale+noise.
    Eigen::VectorXd factor;
    if (j == 0) {
      factor =
          panel.excess_returns(std::vector<std::string>{data::kMarketId}, 0, spec.weeks - 1)
              .col(0);
    } else {
      const data::GroundTruth::EtfTruth* pure = nullptr;
      for (const auto& et : market.truth.etfs) {
        if (et.primary_factor == j && !et.secondary_factor) {
          pure = &et;
          break;
        }
      }
      REQUIRE(pure != nullptr);
      factor = panel.excess_returns(std::vector<std::string>{pure->asset_id}, 0,
                                    spec.weeks - 1)
                   .col(0);
    }
    double best = 0.0;
    for (const auto& id : market.truth.factor_proxies[static_cast<size_t>(j)]) {
      if (id == data::kMarketId) continue;
      Eigen::VectorXd proxy =
          panel.excess_returns(std::vector<std::string>{id}, 0, spec.weeks - 1).col(0);
      Eigen::VectorXd a = factor.array() - factor.mean();
      Eigen::VectorXd b = proxy.array() - proxy.mean();
      double corr = a.dot(b) / (a.norm() * b.norm());
      best = std::max(best, std::abs(corr));
    }
    CHECK(best > 0.9);
  }
}

TEST_CASE("synthetic market CSVs round-trip through load_panel") {
  TempDir tmp("synth_roundtrip");
  data::SynthSpec spec;
  spec.weeks = 40;
  spec.n_stocks = 5;
  spec.n_etfs = 6;
  spec.k_factors = 2;
  spec.max_loadings = 2;
  auto market = data::generate_synthetic_market(spec, 77);
  data::write_market_csvs(market, tmp.path());

  auto panel = data::load_panel(tmp.file("returns.csv"), tmp.file("meta.csv"));
  data::merge_factors(panel, tmp.file("factors.csv"));
  CHECK(panel.n_weeks() == spec.weeks);
  CHECK(panel.n_assets() == market.panel.n_assets());
  for (int c = 0; c < panel.n_assets(); ++c) {
    const auto& id = market.panel.meta(c).asset_id;
    int rc = panel.column_of(id);
    REQUIRE(rc >= 0);
    for (int t = 0; t < panel.n_weeks(); ++t) {
      CHECK(panel.ret(t, rc) == doctest::Approx(market.panel.ret(t, c)).epsilon(1e-9));
    }
  }
  // round-robin class assignment exercises several classes
  std::set<std::string> classes;
  for (const auto& et : market.truth.etfs) {
    classes.insert(data::EtfTaxonomy::builtin().class_of(et.subclass));
  }
  CHECK(classes.size() >= 2);
}
