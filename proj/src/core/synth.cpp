#include "core/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "core/common.hpp"
#include "core/csv.hpp"
#include "core/rng.hpp"

namespace amf::data {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string seq_id(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%03d", prefix, i);
  return buf;
}

const std::vector<std::string>& default_subclass_cycle() {
  // One representative subclass per Appendix-style class, round-robin so
  // every class shows up in the heatmaps.
  static const std::vector<std::string> cycle = {
      "Government Bonds",       "Commodities",      "Currency",
      "Diversified Portfolio",  "Large Cap Blend Equities", "Hedge Fund",
      "Inverse Equities",       "Leveraged Equities", "Real Estate",
      "Volatility",
  };
  return cycle;
}

SynthSpec with_defaults(SynthSpec spec) {
  int k = spec.k_factors;
  bool anomaly = spec.mode == "anomaly";
  if (anomaly) {
    if (spec.low_factors.empty()) spec.low_factors = {1, 2, 3};
    if (spec.high_factors.empty()) spec.high_factors = {4, 5, 6};
  }
  auto in = [](const std::vector<int>& v, int x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  for (int j = static_cast<int>(spec.factor_mu.size()); j < k; ++j) {
    double mu = j == 0 ? 0.0015 : 0.001;
    if (anomaly && in(spec.low_factors, j)) mu = 0.0025;
    if (anomaly && in(spec.high_factors, j)) mu = -0.001;
    spec.factor_mu.push_back(mu);
  }
  for (int j = static_cast<int>(spec.factor_sd.size()); j < k; ++j) {
    double sd = j == 0 ? 0.02 : 0.025;
    if (anomaly && in(spec.low_factors, j)) sd = 0.010;
    if (anomaly && in(spec.high_factors, j)) sd = 0.030;
    spec.factor_sd.push_back(sd);
  }
  if (spec.factor_subclass.empty()) {
    const auto& cycle = default_subclass_cycle();
    static const std::vector<std::string> low_cycle = {"Government Bonds", "Corporate Bonds",
                                                       "High Yield Bonds"};
    static const std::vector<std::string> high_cycle = {"Materials", "Precious Metals",
                                                        "Health & Biotech Equities"};
    for (int j = 0; j < k; ++j) {
      std::string sub = cycle[static_cast<size_t>(j) % cycle.size()];
      if (anomaly) {
        auto lp = std::find(spec.low_factors.begin(), spec.low_factors.end(), j);
        auto hp = std::find(spec.high_factors.begin(), spec.high_factors.end(), j);
        if (j == 0) {
          sub = "Large Cap Blend Equities";
        } else if (lp != spec.low_factors.end()) {
          sub = low_cycle[static_cast<size_t>(lp - spec.low_factors.begin()) % low_cycle.size()];
        } else if (hp != spec.high_factors.end()) {
          sub = high_cycle[static_cast<size_t>(hp - spec.high_factors.begin()) % high_cycle.size()];
        }
      }
      spec.factor_subclass.push_back(sub);
    }
  }
  return spec;
}

}  // namespace

void validate(const SynthSpec& spec) {
  auto fail = [](const std::string& m) { raise(ErrorKind::InvalidArgument, "synth spec: " + m); };
  if (spec.weeks < 2) fail("weeks must be >= 2");
  if (spec.n_stocks < 1 || spec.n_etfs < 1) fail("asset counts must be positive");
  if (spec.k_factors < 1) fail("k_factors must be positive");
  if (spec.k_factors > spec.n_etfs) fail("k_factors exceeds ETF count");
  if (spec.max_loadings < 1 || spec.max_loadings > spec.k_factors) {
    fail("max_loadings must be in [1, k_factors]");
  }
  if (spec.noise_stock < 0 || spec.noise_etf < 0) fail("noise scales must be >= 0");
  if (spec.mode != "generic" && spec.mode != "anomaly") fail("mode must be generic|anomaly");
  if (spec.mode == "anomaly") {
    SynthSpec d = with_defaults(spec);
    for (int j : d.low_factors) {
      if (j < 1 || j >= d.k_factors) fail("low_factors out of range (factor 0 is the market)");
    }
    for (int j : d.high_factors) {
      if (j < 1 || j >= d.k_factors) fail("high_factors out of range");
    }
  }
  if (!spec.factor_subclass.empty() &&
      static_cast<int>(spec.factor_subclass.size()) < spec.k_factors) {
    fail("factor_subclass must be empty or cover every factor");
  }
  for (const auto& sub : spec.factor_subclass) {
    if (!EtfTaxonomy::builtin().has_subclass(sub)) fail("unknown factor subclass " + sub);
  }
  if (static_cast<int>(spec.factor_mu.size()) > spec.k_factors ||
      static_cast<int>(spec.factor_sd.size()) > spec.k_factors) {
    fail("factor_mu/factor_sd longer than k_factors");
  }
}

SyntheticMarket generate_synthetic_market(const SynthSpec& raw_spec, uint64_t seed) {
  validate(raw_spec);
  SynthSpec spec = with_defaults(raw_spec);
  const int t_weeks = spec.weeks;
  const int k = spec.k_factors;
  const auto& tax = EtfTaxonomy::builtin();

  // Latent factor excess returns; factor 0 is the market.
  Rng factor_rng(derive_seed(seed, 1));
  Eigen::MatrixXd factors(t_weeks, k);
  for (int j = 0; j < k; ++j) {
    for (int t = 0; t < t_weeks; ++t) {
      factors(t, j) = factor_rng.normal(spec.factor_mu[static_cast<size_t>(j)],
                                        spec.factor_sd[static_cast<size_t>(j)]);
    }
  }

  // SMB/HML/RMW/CMA are independent of the latent structure.
  Rng ff5_rng(derive_seed(seed, 2));
  Eigen::MatrixXd ff5_rest(t_weeks, 4);
  const double rest_mu[4] = {-0.0002, 0.0003, 0.0002, -0.0003};
  for (int j = 0; j < 4; ++j) {
    for (int t = 0; t < t_weeks; ++t) {
      ff5_rest(t, j) = ff5_rng.normal(rest_mu[j], 0.01);
    }
  }

  GroundTruth truth;
  truth.seed = seed;
  truth.mode = spec.mode;
  truth.factor_mu = spec.factor_mu;
  truth.factor_sd = spec.factor_sd;
  truth.factor_subclass = spec.factor_subclass;
  truth.factor_proxies.assign(static_cast<size_t>(k), {});
  truth.factor_proxies[0].push_back(kMarketId);
  truth.factor_exposed.assign(static_cast<size_t>(k), {});
  truth.factor_exposed[0].push_back(kMarketId);

  // ETFs: noisy affine exposure to at most two latent factors. In anomaly
  // mode the market-factor ETFs are pure trackers, so the low/high signal
  // carriers stay inside their designated classes (the secondary draws are
  // still consumed to keep the stream aligned across modes).
  const bool anomaly = spec.mode == "anomaly";
  Rng etf_rng(derive_seed(seed, 3));
  Eigen::MatrixXd etf_excess(t_weeks, spec.n_etfs);
  std::vector<GroundTruth::EtfTruth> etf_truths;
  for (int e = 0; e < spec.n_etfs; ++e) {
    GroundTruth::EtfTruth et;
    et.asset_id = seq_id("ETF", e);
    et.primary_factor = e % k;
    et.primary_loading = etf_rng.uniform(0.8, 1.2);
    if (k > 1 && etf_rng.uniform() < 0.4) {
      int other = static_cast<int>(etf_rng.uniform_int(static_cast<uint64_t>(k - 1)));
      if (other >= et.primary_factor) ++other;
      double loading = etf_rng.uniform(0.1, 0.3);
      if (!(anomaly && et.primary_factor == 0)) {
        et.secondary_factor = other;
        et.secondary_loading = loading;
      }
    }
    et.subclass = spec.factor_subclass[static_cast<size_t>(et.primary_factor)];
    for (int t = 0; t < t_weeks; ++t) {
      double v = et.primary_loading * factors(t, et.primary_factor);
      if (et.secondary_factor) v += et.secondary_loading * factors(t, *et.secondary_factor);
      v += spec.noise_etf * etf_rng.normal();
      etf_excess(t, e) = v;
    }
    truth.factor_proxies[static_cast<size_t>(et.primary_factor)].push_back(et.asset_id);
    truth.factor_exposed[static_cast<size_t>(et.primary_factor)].push_back(et.asset_id);
    if (et.secondary_factor) {
      truth.factor_exposed[static_cast<size_t>(*et.secondary_factor)].push_back(et.asset_id);
    }
    etf_truths.push_back(std::move(et));
  }

  // Stocks.
  Rng stock_rng(derive_seed(seed, 4));
  Eigen::MatrixXd stock_excess(t_weeks, spec.n_stocks);
  std::vector<GroundTruth::StockTruth> stock_truths;
  for (int i = 0; i < spec.n_stocks; ++i) {
    GroundTruth::StockTruth st;
    st.asset_id = seq_id("STK", i);
    if (anomaly) {
      bool low = i < spec.n_stocks / 2;
      st.group = low ? "low" : "high";
      st.factors.push_back(0);
      st.loadings.push_back(low ? stock_rng.uniform(0.3, 0.5) : stock_rng.uniform(1.0, 1.6));
      const auto& group_factors = low ? spec.low_factors : spec.high_factors;
      for (int j : group_factors) {
        st.factors.push_back(j);
        st.loadings.push_back(low ? stock_rng.uniform(0.6, 1.0) : stock_rng.uniform(0.8, 1.4));
      }
      st.noise_sd = low ? spec.low_noise_stock : spec.high_noise_stock;
    } else {
      st.factors = stock_rng.sample_without_replacement(k, spec.max_loadings);
      std::sort(st.factors.begin(), st.factors.end());
      for (size_t j = 0; j < st.factors.size(); ++j) {
        st.loadings.push_back(stock_rng.uniform(0.5, 1.5));
      }
      st.noise_sd = spec.noise_stock;
    }
    for (int t = 0; t < t_weeks; ++t) {
      double v = spec.alpha_stock;
      for (size_t j = 0; j < st.factors.size(); ++j) {
        v += st.loadings[j] * factors(t, st.factors[j]);
      }
      v += st.noise_sd * stock_rng.normal();
      stock_excess(t, i) = v;
    }
    stock_truths.push_back(std::move(st));
  }

  // Assemble the panel: stocks, ETFs, factor columns, risk-free.
  Calendar cal;
  for (int t = 0; t < t_weeks; ++t) cal.dates.push_back(spec.start_date.plus_weeks(t));

  std::vector<AssetMeta> assets;
  for (int i = 0; i < spec.n_stocks; ++i) {
    assets.push_back({seq_id("STK", i), AssetKind::Stock, i % 2 == 0 ? 10 : 11, 1 + i % 3,
                      std::nullopt, std::nullopt});
  }
  for (int e = 0; e < spec.n_etfs; ++e) {
    const auto& et = etf_truths[static_cast<size_t>(e)];
    assets.push_back({et.asset_id, AssetKind::Etf, 73, 1 + e % 3, tax.class_of(et.subclass),
                      et.subclass});
  }
  for (const auto& id : ff5_ids()) {
    assets.push_back({id, AssetKind::FF5Factor, 0, 0, std::nullopt, std::nullopt});
  }
  assets.push_back({kRiskFreeId, AssetKind::RiskFree, 0, 0, std::nullopt, std::nullopt});

  ReturnsPanel panel(std::move(cal), std::move(assets));
  const double rf = spec.rf_weekly;
  for (int t = 0; t < t_weeks; ++t) {
    for (int i = 0; i < spec.n_stocks; ++i) panel.set_ret(t, i, stock_excess(t, i) + rf);
    for (int e = 0; e < spec.n_etfs; ++e) {
      panel.set_ret(t, spec.n_stocks + e, etf_excess(t, e) + rf);
    }
    int base = spec.n_stocks + spec.n_etfs;
    panel.set_ret(t, base + 0, factors(t, 0) + rf);  // MKT_RF
    for (int j = 0; j < 4; ++j) panel.set_ret(t, base + 1 + j, ff5_rest(t, j) + rf);
    panel.set_ret(t, base + 5, rf);
  }

  truth.stocks = std::move(stock_truths);
  truth.etfs = std::move(etf_truths);
  return SyntheticMarket{std::move(panel), std::move(truth)};
}

std::string GroundTruth::to_json() const {
  ordered_json j;
  j["seed"] = seed;
  j["mode"] = mode;
  j["factors"] = ordered_json::array();
  for (size_t f = 0; f < factor_mu.size(); ++f) {
    ordered_json fj;
    fj["index"] = f;
    fj["weekly_mu"] = factor_mu[f];
    fj["weekly_sd"] = factor_sd[f];
    fj["etf_subclass"] = factor_subclass[f];
    fj["proxies"] = factor_proxies[f];
    fj["exposed"] = factor_exposed[f];
    j["factors"].push_back(std::move(fj));
  }
  j["stocks"] = ordered_json::array();
  for (const auto& s : stocks) {
    ordered_json sj;
    sj["asset_id"] = s.asset_id;
    sj["factors"] = s.factors;
    sj["loadings"] = s.loadings;
    sj["noise_sd"] = s.noise_sd;
    if (!s.group.empty()) sj["group"] = s.group;
    j["stocks"].push_back(std::move(sj));
  }
  j["etfs"] = ordered_json::array();
  for (const auto& e : etfs) {
    ordered_json ej;
    ej["asset_id"] = e.asset_id;
    ej["primary_factor"] = e.primary_factor;
    ej["primary_loading"] = e.primary_loading;
    if (e.secondary_factor) {
      ej["secondary_factor"] = *e.secondary_factor;
      ej["secondary_loading"] = e.secondary_loading;
    }
    ej["subclass"] = e.subclass;
    j["etfs"].push_back(std::move(ej));
  }
  return j.dump(2);
}

void write_market_csvs(const SyntheticMarket& market, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) raise(ErrorKind::Io, "cannot create output directory " + out_dir);

  const ReturnsPanel& p = market.panel;
  {
    csv::Writer w(out_dir + "/returns.csv");
    w.row({"date", "asset_id", "ret"});
    for (int t = 0; t < p.n_weeks(); ++t) {
      std::string date = p.calendar().at(t).to_string();
      for (int c = 0; c < p.n_assets(); ++c) {
        AssetKind kind = p.meta(c).kind;
        if (kind != AssetKind::Stock && kind != AssetKind::Etf) continue;
        if (!p.observed(t, c)) continue;
        w.row({date, p.meta(c).asset_id, csv::fmt(p.ret(t, c))});
      }
    }
    w.close();
  }
  {
    csv::Writer w(out_dir + "/meta.csv");
    w.row({"asset_id", "kind", "share_code", "exchange_code", "etf_class", "etf_subclass"});
    for (int c = 0; c < p.n_assets(); ++c) {
      const AssetMeta& m = p.meta(c);
      if (m.kind != AssetKind::Stock && m.kind != AssetKind::Etf) continue;
      w.row({m.asset_id, asset_kind_name(m.kind), std::to_string(m.share_code),
             std::to_string(m.exchange_code), m.etf_class.value_or(""),
             m.etf_subclass.value_or("")});
    }
    w.close();
  }
  {
    csv::Writer w(out_dir + "/factors.csv");
    w.row({"date", "mkt_rf", "smb", "hml", "rmw", "cma", "rf"});
    std::vector<int> cols;
    for (const auto& id : ff5_ids()) cols.push_back(p.column_of(id));
    int rf_col = p.risk_free_col();
    for (int t = 0; t < p.n_weeks(); ++t) {
      double rf = p.ret(t, rf_col);
      std::vector<std::string> fields = {p.calendar().at(t).to_string()};
      for (int c : cols) fields.push_back(csv::fmt(p.ret(t, c) - rf));
      fields.push_back(csv::fmt(rf));
      w.row(fields);
    }
    w.close();
  }
  {
    std::ofstream out(out_dir + "/ground_truth.json");
    if (!out) raise(ErrorKind::Io, "cannot write " + out_dir + "/ground_truth.json");
    out << market.truth.to_json() << "\n";
  }
}

}  // namespace amf::data
