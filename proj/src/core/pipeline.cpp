#include "core/pipeline.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>

#include "core/common.hpp"
#include "core/csv.hpp"
#include "core/gibs.hpp"
#include "core/log.hpp"
#include "core/portfolio.hpp"
#include "core/rng.hpp"
#include "core/stats.hpp"
#include "core/synth.hpp"

namespace amf::pipeline {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) raise(ErrorKind::Io, "cannot create directory " + dir);
}

void require_inputs(const RunConfig& c) {
  if (c.returns_csv.empty() || c.meta_csv.empty() || c.factors_csv.empty()) {
    raise(ErrorKind::InvalidArgument,
          "config: returns_csv, meta_csv and factors_csv are required");
  }
}

data::ReturnsPanel load_inputs(const RunConfig& c) {
  data::ReturnsPanel panel = data::load_panel(c.returns_csv, c.meta_csv);
  data::merge_factors(panel, c.factors_csv);
  return panel;
}

data::EtfTaxonomy active_taxonomy(const RunConfig& c) {
  if (c.taxonomy_csv.empty()) return data::EtfTaxonomy::builtin();
  return data::EtfTaxonomy::load_csv(c.taxonomy_csv);
}

struct EvalRange {
  int first = 0;
  int last = 0;
};

EvalRange resolve_eval_range(const data::ReturnsPanel& panel, const RunConfig& c) {
  EvalRange r;
  if (c.eval_start) {
    r.first = panel.calendar().index_of(*c.eval_start);
    if (r.first < 0) {
      raise(ErrorKind::InvalidArgument,
            "eval_start " + c.eval_start->to_string() + " not in calendar");
    }
  } else {
    r.first = c.window_weeks;
  }
  if (c.eval_end) {
    r.last = panel.calendar().index_of(*c.eval_end);
    if (r.last < 0) {
      raise(ErrorKind::InvalidArgument,
            "eval_end " + c.eval_end->to_string() + " not in calendar");
    }
  } else {
    r.last = panel.n_weeks() - 1;
  }
  if (r.first > r.last) raise(ErrorKind::InvalidArgument, "empty evaluation period");
  if (r.first < c.window_weeks) {
    raise(ErrorKind::InvalidArgument,
          "first evaluation week needs " + std::to_string(c.window_weeks) +
              " prior weeks of data");
  }
  return r;
}

gibs::RollSettings roll_settings(const RunConfig& c) {
  gibs::RollSettings s;
  s.window_weeks = c.window_weeks;
  s.vol_lookback_weeks = c.vol_lookback_weeks;
  s.quartile_fraction = c.quartile_fraction;
  s.universe_top_n = c.universe_top_n;
  s.pca_variance_target = c.pca_variance_target;
  s.jobs = c.jobs;
  s.gibs.cluster_threshold = c.cluster_threshold;
  s.gibs.cluster_threshold_union = c.cluster_threshold_union.value_or(c.cluster_threshold);
  s.gibs.grid.length = c.lasso_grid_size;
  s.gibs.grid.min_ratio = c.lasso_min_ratio;
  s.gibs.cv_folds = c.cv_folds;
  s.gibs.support_cap = c.lasso_cap;
  s.gibs.significance_level = c.significance_level;
  s.gibs.seed = c.seed;
  return s;
}

void check_headers(const std::string& path, const std::vector<std::string>& header) {
  csv::Reader reader(path, header);  // throws on a missing file or bad header
  (void)reader;
}

void write_summary(const RunConfig& c, const std::string& command,
                   const std::vector<std::string>& outputs, ordered_json extra) {
  ordered_json j;
  j["command"] = command;
  j["config"] = ordered_json::parse(config_to_json(c));
  j["outputs"] = outputs;
  for (auto& [k, v] : extra.items()) j[k] = v;
  std::ofstream out(c.out_dir + "/summary.json");
  if (!out) raise(ErrorKind::Io, "cannot write summary.json");
  out << j.dump(2) << "\n";
}

void write_portfolio_csvs(const std::string& out_dir, const gibs::WindowLedger& ledger) {
  csv::Writer members(out_dir + "/portfolios.csv");
  members.row({"date", "side", "asset_id"});
  csv::Writer rets(out_dir + "/portfolio_returns.csv");
  rets.row({"date", "low_excess", "high_excess"});
  for (const auto& row : ledger.rows) {
    if (row.failed) continue;
    std::string date = row.week.to_string();
    for (const auto& id : row.low.members) members.row({date, "low", id});
    for (const auto& id : row.high.members) members.row({date, "high", id});
    rets.row({date, csv::fmt(row.low.realized_excess), csv::fmt(row.high.realized_excess)});
  }
  members.close();
  rets.close();
}

// GIBS over the whole evaluation period for the Table-3-style test: one
// static selection per portfolio, then the stacked interaction ANOVA.
std::optional<linreg::AnovaResult> full_period_anova(const data::ReturnsPanel& panel,
                                                     const gibs::WindowLedger& ledger,
                                                     const EvalRange& range,
                                                     const gibs::RollSettings& settings) {
  for (const auto& row : ledger.rows) {
    if (row.failed) {
      log::warn("factor-difference ANOVA skipped: ledger has failed weeks");
      return std::nullopt;
    }
  }
  std::vector<std::string> etfs;
  for (int c = 0; c < panel.n_assets(); ++c) {
    const auto& m = panel.meta(c);
    if (m.kind != data::AssetKind::Etf || m.share_code != 73) continue;
    if (m.exchange_code < 1 || m.exchange_code > 3) continue;
    if (!panel.fully_observed(c, range.first, range.last)) continue;
    etfs.push_back(m.asset_id);
  }
  if (etfs.empty()) {
    log::warn("factor-difference ANOVA skipped: no ETF complete over the period");
    return std::nullopt;
  }
  try {
    auto basis = gibs::build_basis_panel(panel, etfs, range.first, range.last);
    auto prepared = gibs::prepare_basis(std::move(basis), settings.gibs);
    const Eigen::Index n = range.last - range.first + 1;
    Eigen::VectorXd y_low(n), y_high(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      y_low(i) = ledger.rows[static_cast<size_t>(i)].low.realized_excess;
      y_high(i) = ledger.rows[static_cast<size_t>(i)].high.realized_excess;
    }
    auto fit_low = gibs::gibs_select(y_low, prepared, settings.gibs,
                                     derive_seed(settings.gibs.seed, 0x46554C4C, 0));
    auto fit_high = gibs::gibs_select(y_high, prepared, settings.gibs,
                                      derive_seed(settings.gibs.seed, 0x46554C4C, 1));
    return stats::factor_difference_test(y_low, y_high, prepared.basis.x, fit_low.selected,
                                         fit_high.selected);
  } catch (const Error& e) {
    log::warn(std::string("factor-difference ANOVA failed: ") + e.what());
    return std::nullopt;
  }
}

std::vector<stats::RiskPremiumRow> final_risk_premia(const data::ReturnsPanel& panel,
                                                     const gibs::WindowLedger& ledger,
                                                     const EvalRange& range) {
  const gibs::LedgerRow* last_ok = nullptr;
  for (auto it = ledger.rows.rbegin(); it != ledger.rows.rend(); ++it) {
    if (!it->failed) {
      last_ok = &*it;
      break;
    }
  }
  if (last_ok == nullptr) return {};
  std::vector<std::string> ids = data::ff5_ids();
  for (const auto& id : last_ok->union_prototype_ids) {
    int col = panel.column_of(id);
    if (col >= 0 && panel.fully_observed(col, range.first, range.last)) {
      ids.push_back(id);
    } else {
      log::warn("risk premium skipped for " + id + ": incomplete over the period");
    }
  }
  return stats::risk_premia(panel, ids, range.first, range.last);
}

void validate_run_outputs(const RunConfig& c) {
  check_headers(c.out_dir + "/portfolios.csv", {"date", "side", "asset_id"});
  check_headers(c.out_dir + "/portfolio_returns.csv", {"date", "low_excess", "high_excess"});
  if (c.portfolios_only) return;
  {
    std::ifstream in(c.out_dir + "/ledger.jsonl");
    if (!in) raise(ErrorKind::Io, "missing ledger.jsonl");
    std::string line;
    if (!std::getline(in, line)) raise(ErrorKind::Data, "ledger.jsonl is empty");
    try {
      auto parsed = nlohmann::json::parse(line);
      (void)parsed;
    } catch (const nlohmann::json::exception& e) {
      raise(ErrorKind::Data, std::string("ledger.jsonl: ") + e.what());
    }
  }
  const std::string rep = c.out_dir + "/report";
  check_headers(rep + "/residual_tests.csv",
                {"series", "low", "high", "low_minus_high", "t_stat", "df", "p_value"});
  check_headers(rep + "/anova.csv",
                {"model", "res_df", "rss", "df_diff", "sum_sq", "f_stat", "p_value"});
  check_headers(rep + "/intercept_fdr.csv",
                {"portfolio", "ff5_p_lt_level_pct", "amf_p_lt_level_pct",
                 "ff5_bhy_q_lt_level_pct", "amf_bhy_q_lt_level_pct"});
  check_headers(rep + "/counts.csv", {"portfolio", "select", "ff5_select", "etf_select",
                                      "signif", "ff5_signif", "etf_signif"});
  check_headers(rep + "/heatmap_low.csv", {"class"});
  check_headers(rep + "/heatmap_high.csv", {"class"});
  check_headers(rep + "/risk_premia.csv",
                {"name", "category", "annual_premium_pct", "exceeds_ff5_floor"});
  check_headers(rep + "/gof.csv",
                {"portfolio", "ff5_adj_r2_mean", "amf_adj_r2_mean", "adj_r2_change_pct",
                 "anova_p_lt_level_ratio", "anova_bhy_q_lt_level_ratio", "ff5_oos_r2",
                 "amf_oos_r2", "oos_r2_change_pct"});
  for (const char* f : {"cumcap_excess.csv", "cumcap_ff5.csv", "cumcap_amf.csv"}) {
    check_headers(rep + "/" + f, {"date", "low", "high"});
  }
  check_headers(rep + "/dimensions.csv", {"date", "etf_count", "gibs_dim", "pca_dim"});
}

}  // namespace

void cmd_synth(const RunConfig& config) {
  validate_config(config);
  data::validate(config.synth);
  if (config.synth.weeks < config.window_weeks + 1) {
    raise(ErrorKind::InvalidArgument,
          "synth spec: weeks must exceed window_weeks so at least one week is evaluable");
  }
  ensure_dir(config.out_dir);
  auto market = data::generate_synthetic_market(config.synth, config.seed);
  data::write_market_csvs(market, config.out_dir);

  check_headers(config.out_dir + "/returns.csv", {"date", "asset_id", "ret"});
  check_headers(config.out_dir + "/meta.csv", {"asset_id", "kind", "share_code",
                                               "exchange_code", "etf_class", "etf_subclass"});
  check_headers(config.out_dir + "/factors.csv",
                {"date", "mkt_rf", "smb", "hml", "rmw", "cma", "rf"});
  ordered_json extra;
  extra["weeks"] = config.synth.weeks;
  extra["n_stocks"] = config.synth.n_stocks;
  extra["n_etfs"] = config.synth.n_etfs;
  write_summary(config, "synth",
                {"returns.csv", "meta.csv", "factors.csv", "ground_truth.json"},
                std::move(extra));
  log::info("synth: wrote market to " + config.out_dir);
}

void cmd_run(const RunConfig& config) {
  validate_config(config);
  require_inputs(config);
  data::ReturnsPanel panel = load_inputs(config);
  data::EtfTaxonomy taxonomy = active_taxonomy(config);
  EvalRange range = resolve_eval_range(panel, config);
  gibs::RollSettings settings = roll_settings(config);
  ensure_dir(config.out_dir);

  if (config.portfolios_only) {
    gibs::WindowLedger ledger;
    data::UniverseFilters filters;
    filters.vol_lookback_weeks = config.vol_lookback_weeks;
    filters.etf_window_weeks = config.window_weeks;
    filters.top_n_by_cap = config.universe_top_n;
    for (int e = range.first; e <= range.last; ++e) {
      gibs::LedgerRow row;
      row.week = panel.calendar().at(e);
      try {
        auto universe =
            data::build_universe(panel, panel.calendar().at(e - 1), filters);
        std::vector<std::string> stocks(universe.eligible_stocks.begin(),
                                        universe.eligible_stocks.end());
        auto ranking = portfolio::trailing_vol(panel, panel.calendar().at(e - 1), stocks,
                                               config.vol_lookback_weeks);
        auto ports = portfolio::form_portfolios(ranking, config.quartile_fraction);
        row.low.members.assign(ports.low_ids.begin(), ports.low_ids.end());
        row.high.members.assign(ports.high_ids.begin(), ports.high_ids.end());
        double r0 = panel.risk_free(e);
        row.low.realized_excess =
            portfolio::equal_weight_return(panel, e, row.low.members) - r0;
        row.high.realized_excess =
            portfolio::equal_weight_return(panel, e, row.high.members) - r0;
      } catch (const Error& err) {
        row.failed = true;
        row.failure = err.what();
        log::warn("week " + row.week.to_string() + " failed: " + row.failure);
      }
      ledger.rows.push_back(std::move(row));
    }
    write_portfolio_csvs(config.out_dir, ledger);
    write_summary(config, "run", {"portfolios.csv", "portfolio_returns.csv"},
                  ordered_json{{"portfolios_only", true}});
    validate_run_outputs(config);
    return;
  }

  gibs::WindowLedger ledger =
      gibs::run_rolling(panel, taxonomy, range.first, range.last, settings);
  int failed = 0;
  for (const auto& row : ledger.rows) failed += row.failed ? 1 : 0;
  if (failed == static_cast<int>(ledger.rows.size())) {
    raise(ErrorKind::Data, "every evaluation week failed");
  }

  write_portfolio_csvs(config.out_dir, ledger);
  gibs::write_ledger_jsonl(ledger, config.out_dir + "/ledger.jsonl");

  auto anova = full_period_anova(panel, ledger, range, settings);
  auto premia = final_risk_premia(panel, ledger, range);
  stats::ReportOptions opts;
  opts.welch_on_returns = config.welch_on_returns;
  opts.heatmap_share_mode = config.heatmap_share_mode;
  opts.significance_level = config.significance_level;
  stats::write_reports(config.out_dir + "/report", ledger, anova ? &*anova : nullptr, premia,
                       opts);

  ordered_json extra;
  extra["eval_weeks"] = static_cast<int>(ledger.rows.size());
  extra["failed_weeks"] = failed;
  write_summary(config, "run",
                {"portfolios.csv", "portfolio_returns.csv", "ledger.jsonl", "report"},
                std::move(extra));
  validate_run_outputs(config);
  log::info("run: wrote ledger and reports to " + config.out_dir);
}

void cmd_dims(const RunConfig& config) {
  validate_config(config);
  require_inputs(config);
  data::ReturnsPanel panel = load_inputs(config);
  EvalRange range = resolve_eval_range(panel, config);
  gibs::RollSettings settings = roll_settings(config);
  ensure_dir(config.out_dir);

  data::UniverseFilters filters;
  filters.vol_lookback_weeks = config.vol_lookback_weeks;
  filters.etf_window_weeks = config.window_weeks;
  filters.top_n_by_cap = config.universe_top_n;

  csv::Writer w(config.out_dir + "/dimensions.csv");
  w.row({"date", "etf_count", "gibs_dim", "pca_dim"});
  for (int e = range.first; e <= range.last; ++e) {
    const Date window_end = panel.calendar().at(e - 1);
    try {
      auto universe = data::build_universe(panel, window_end, filters);
      int gibs_dim = gibs::gibs_dimension(panel, window_end, settings.gibs,
                                          config.window_weeks, filters);
      int pca_dim = gibs::pca_dimension(panel, window_end, config.pca_variance_target,
                                        config.window_weeks, filters);
      w.row({panel.calendar().at(e).to_string(),
             std::to_string(universe.eligible_etfs.size()), std::to_string(gibs_dim),
             std::to_string(pca_dim)});
    } catch (const Error& err) {
      log::warn("dims week " + panel.calendar().at(e).to_string() + " failed: " + err.what());
    }
  }
  w.close();
  check_headers(config.out_dir + "/dimensions.csv", {"date", "etf_count", "gibs_dim", "pca_dim"});
  write_summary(config, "dims", {"dimensions.csv"}, ordered_json::object());
  log::info("dims: wrote " + config.out_dir + "/dimensions.csv");
}

}  // namespace amf::pipeline
