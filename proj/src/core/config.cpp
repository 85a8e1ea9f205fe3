#include "core/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

#include "core/common.hpp"

namespace amf {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& m) { raise(ErrorKind::InvalidArgument, "config: " + m); }

template <typename T>
T as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    bad("bad value for '" + key + "'");
  }
}

void apply_json(RunConfig& c, const json& j);

void apply_synth_json(RunConfig& c, const json& j) {
  for (const auto& [key, value] : j.items()) {
    data::SynthSpec& s = c.synth;
    if (key == "weeks") s.weeks = as<int>(value, key);
    else if (key == "n_stocks") s.n_stocks = as<int>(value, key);
    else if (key == "n_etfs") s.n_etfs = as<int>(value, key);
    else if (key == "k_factors") s.k_factors = as<int>(value, key);
    else if (key == "max_loadings") s.max_loadings = as<int>(value, key);
    else if (key == "noise_stock") s.noise_stock = as<double>(value, key);
    else if (key == "noise_etf") s.noise_etf = as<double>(value, key);
    else if (key == "rf_weekly") s.rf_weekly = as<double>(value, key);
    else if (key == "alpha_stock") s.alpha_stock = as<double>(value, key);
    else if (key == "start_date") s.start_date = parse_date(as<std::string>(value, key));
    else if (key == "factor_mu") s.factor_mu = as<std::vector<double>>(value, key);
    else if (key == "factor_sd") s.factor_sd = as<std::vector<double>>(value, key);
    else if (key == "factor_subclass") s.factor_subclass = as<std::vector<std::string>>(value, key);
    else if (key == "mode") s.mode = as<std::string>(value, key);
    else if (key == "low_factors") s.low_factors = as<std::vector<int>>(value, key);
    else if (key == "high_factors") s.high_factors = as<std::vector<int>>(value, key);
    else if (key == "low_noise_stock") s.low_noise_stock = as<double>(value, key);
    else if (key == "high_noise_stock") s.high_noise_stock = as<double>(value, key);
    else bad("unknown synth key '" + key + "'");
  }
}

void apply_json(RunConfig& c, const json& j) {
  if (!j.is_object()) bad("top-level JSON must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "returns_csv") c.returns_csv = as<std::string>(value, key);
    else if (key == "meta_csv") c.meta_csv = as<std::string>(value, key);
    else if (key == "factors_csv") c.factors_csv = as<std::string>(value, key);
    else if (key == "taxonomy_csv") c.taxonomy_csv = as<std::string>(value, key);
    else if (key == "out_dir") c.out_dir = as<std::string>(value, key);
    else if (key == "seed") c.seed = as<uint64_t>(value, key);
    else if (key == "jobs") c.jobs = as<int>(value, key);
    else if (key == "eval_start") c.eval_start = parse_date(as<std::string>(value, key));
    else if (key == "eval_end") c.eval_end = parse_date(as<std::string>(value, key));
    else if (key == "window_weeks") c.window_weeks = as<int>(value, key);
    else if (key == "vol_lookback_weeks") c.vol_lookback_weeks = as<int>(value, key);
    else if (key == "quartile_fraction") c.quartile_fraction = as<double>(value, key);
    else if (key == "universe_top_n") c.universe_top_n = as<int>(value, key);
    else if (key == "cluster_threshold") c.cluster_threshold = as<double>(value, key);
    else if (key == "cluster_threshold_union") c.cluster_threshold_union = as<double>(value, key);
    else if (key == "lasso_grid_size") c.lasso_grid_size = as<int>(value, key);
    else if (key == "lasso_min_ratio") c.lasso_min_ratio = as<double>(value, key);
    else if (key == "cv_folds") c.cv_folds = as<int>(value, key);
    else if (key == "lasso_cap") c.lasso_cap = as<int>(value, key);
    else if (key == "significance_level") c.significance_level = as<double>(value, key);
    else if (key == "pca_variance_target") c.pca_variance_target = as<double>(value, key);
    else if (key == "portfolios_only") c.portfolios_only = as<bool>(value, key);
    else if (key == "welch_on_returns") c.welch_on_returns = as<bool>(value, key);
    else if (key == "heatmap_share_mode") c.heatmap_share_mode = as<bool>(value, key);
    else if (key == "synth") apply_synth_json(c, value);
    else bad("unknown key '" + key + "'");
  }
}

}  // namespace

RunConfig load_config_file(const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) raise(ErrorKind::Io, "cannot open config " + json_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    raise(ErrorKind::Parse, json_path + ": " + e.what());
  }
  RunConfig c;
  apply_json(c, j);
  return c;
}

RunConfig parse_config_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    raise(ErrorKind::Parse, std::string("config JSON: ") + e.what());
  }
  RunConfig c;
  apply_json(c, j);
  return c;
}

void set_option(RunConfig& config, const std::string& key, const std::string& value) {
  // Route through the JSON applier: build {key: parsed-value}, taking the
  // value as JSON when it parses ("42", "true", "[1,2]") and as a raw
  // string otherwise. A numeric-looking value aimed at a string field
  // (--out 123) falls back to the raw string on the type mismatch.
  auto wrap = [&key](const json& parsed) {
    json j;
    size_t dot = key.find('.');
    if (dot == std::string::npos) {
      j[key] = parsed;
    } else {
      j[key.substr(0, dot)][key.substr(dot + 1)] = parsed;
    }
    return j;
  };
  json parsed;
  bool was_json = true;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;
    was_json = false;
  }
  try {
    apply_json(config, wrap(parsed));
  } catch (const Error&) {
    if (!was_json || parsed.is_string()) throw;
    apply_json(config, wrap(json(value)));
  }
}

std::string get_option(const RunConfig& config, const std::string& key) {
  ordered_json j = ordered_json::parse(config_to_json(config));
  size_t dot = key.find('.');
  ordered_json v;
  if (dot == std::string::npos) {
    if (!j.contains(key)) raise(ErrorKind::InvalidArgument, "config: unknown key '" + key + "'");
    v = j[key];
  } else {
    auto outer = key.substr(0, dot), inner = key.substr(dot + 1);
    if (!j.contains(outer) || !j[outer].contains(inner)) {
      raise(ErrorKind::InvalidArgument, "config: unknown key '" + key + "'");
    }
    v = j[outer][inner];
  }
  return v.is_string() ? v.get<std::string>() : v.dump();
}

void validate_config(const RunConfig& c) {
  auto fail = [](const std::string& m) { raise(ErrorKind::InvalidArgument, "config: " + m); };
  if (c.window_weeks < 2) fail("window_weeks must be >= 2");
  if (c.vol_lookback_weeks < 2) fail("vol_lookback_weeks must be >= 2");
  if (c.vol_lookback_weeks > c.window_weeks) {
    fail("vol_lookback_weeks must not exceed window_weeks");
  }
  if (!(c.quartile_fraction > 0.0) || c.quartile_fraction > 0.5) {
    fail("quartile_fraction must be in (0, 0.5]");
  }
  if (c.cv_folds < 2) fail("cv_folds must be >= 2");
  if (c.window_weeks < 2 * c.cv_folds) {
    fail("window_weeks must be >= 2 * cv_folds");
  }
  if (c.lasso_grid_size < 1) fail("lasso_grid_size must be >= 1");
  if (!(c.lasso_min_ratio > 0.0) || c.lasso_min_ratio > 1.0) {
    fail("lasso_min_ratio must be in (0, 1]");
  }
  if (c.lasso_cap < 0) fail("lasso_cap must be >= 0");
  if (c.cluster_threshold < 0.0 || c.cluster_threshold > 1.0) {
    fail("cluster_threshold must be in [0, 1]");
  }
  if (c.cluster_threshold_union &&
      (*c.cluster_threshold_union < 0.0 || *c.cluster_threshold_union > 1.0)) {
    fail("cluster_threshold_union must be in [0, 1]");
  }
  if (!(c.significance_level > 0.0) || c.significance_level >= 1.0) {
    fail("significance_level must be in (0, 1)");
  }
  if (!(c.pca_variance_target > 0.0) || c.pca_variance_target > 1.0) {
    fail("pca_variance_target must be in (0, 1]");
  }
  if (c.jobs < 0) fail("jobs must be >= 0");
  if (c.eval_start && c.eval_end && *c.eval_end < *c.eval_start) {
    fail("eval_end precedes eval_start");
  }
}

std::string config_to_json(const RunConfig& c) {
  ordered_json j;
  j["returns_csv"] = c.returns_csv;
  j["meta_csv"] = c.meta_csv;
  j["factors_csv"] = c.factors_csv;
  j["taxonomy_csv"] = c.taxonomy_csv;
  j["out_dir"] = c.out_dir;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  if (c.eval_start) j["eval_start"] = c.eval_start->to_string();
  if (c.eval_end) j["eval_end"] = c.eval_end->to_string();
  j["window_weeks"] = c.window_weeks;
  j["vol_lookback_weeks"] = c.vol_lookback_weeks;
  j["quartile_fraction"] = c.quartile_fraction;
  j["universe_top_n"] = c.universe_top_n;
  j["cluster_threshold"] = c.cluster_threshold;
  if (c.cluster_threshold_union) j["cluster_threshold_union"] = *c.cluster_threshold_union;
  j["lasso_grid_size"] = c.lasso_grid_size;
  j["lasso_min_ratio"] = c.lasso_min_ratio;
  j["cv_folds"] = c.cv_folds;
  j["lasso_cap"] = c.lasso_cap;
  j["significance_level"] = c.significance_level;
  j["pca_variance_target"] = c.pca_variance_target;
  j["portfolios_only"] = c.portfolios_only;
  j["welch_on_returns"] = c.welch_on_returns;
  j["heatmap_share_mode"] = c.heatmap_share_mode;
  ordered_json s;
  s["weeks"] = c.synth.weeks;
  s["n_stocks"] = c.synth.n_stocks;
  s["n_etfs"] = c.synth.n_etfs;
  s["k_factors"] = c.synth.k_factors;
  s["max_loadings"] = c.synth.max_loadings;
  s["noise_stock"] = c.synth.noise_stock;
  s["noise_etf"] = c.synth.noise_etf;
  s["rf_weekly"] = c.synth.rf_weekly;
  s["alpha_stock"] = c.synth.alpha_stock;
  s["start_date"] = c.synth.start_date.to_string();
  if (!c.synth.factor_mu.empty()) s["factor_mu"] = c.synth.factor_mu;
  if (!c.synth.factor_sd.empty()) s["factor_sd"] = c.synth.factor_sd;
  if (!c.synth.factor_subclass.empty()) s["factor_subclass"] = c.synth.factor_subclass;
  s["mode"] = c.synth.mode;
  if (!c.synth.low_factors.empty()) s["low_factors"] = c.synth.low_factors;
  if (!c.synth.high_factors.empty()) s["high_factors"] = c.synth.high_factors;
  s["low_noise_stock"] = c.synth.low_noise_stock;
  s["high_noise_stock"] = c.synth.high_noise_stock;
  j["synth"] = std::move(s);
  return j.dump(2);
}

}  // namespace amf
