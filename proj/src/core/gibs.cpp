#include "core/gibs.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include "core/common.hpp"
#include "core/log.hpp"
#include "core/protoclust.hpp"
#include "core/rng.hpp"

namespace amf::gibs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool degenerate_column(const Eigen::VectorXd& col) {
  double mean = col.mean();
  double var = (col.array() - mean).square().sum() / static_cast<double>(col.size());
  return !(std::sqrt(var) > 1e-13 * (1.0 + std::abs(mean)));
}

}  // namespace

BasisPanel build_basis_panel(const data::ReturnsPanel& panel,
                             const std::vector<std::string>& etf_ids, int first_week,
                             int last_week) {
  BasisPanel out;
  for (const auto& id : data::ff5_ids()) {
    out.ids.push_back(id);
    out.kinds.push_back(data::AssetKind::FF5Factor);
    out.etf_class.emplace_back();
  }
  for (const auto& id : etf_ids) {
    int col = panel.column_of(id);
    if (col < 0) raise(ErrorKind::Data, "basis ETF not in panel: " + id);
    out.ids.push_back(id);
    out.kinds.push_back(data::AssetKind::Etf);
    out.etf_class.push_back(panel.meta(col).etf_class.value_or(""));
  }
  out.market_col = 0;
  out.x = panel.excess_returns(out.ids, first_week, last_week);
  if (out.x.hasNaN()) {
    raise(ErrorKind::Data, "basis window has missing data in [" +
                               panel.calendar().at(first_week).to_string() + ", " +
                               panel.calendar().at(last_week).to_string() + "]");
  }
  return out;
}

PreparedBasis prepare_basis(BasisPanel basis, const GibsConfig& config) {
  PreparedBasis out;
  out.x_projected = linreg::project_out_market(basis.x, basis.market_col);

  // Step 2: partition ETF columns into their classes, skipping columns the
  // projection degenerated (market clones carry no independent signal).
  for (int c = 0; c < static_cast<int>(basis.ids.size()); ++c) {
    if (basis.kinds[static_cast<size_t>(c)] != data::AssetKind::Etf) continue;
    if (degenerate_column(out.x_projected.col(c))) {
      log::warn("basis column " + basis.ids[static_cast<size_t>(c)] +
                " is degenerate after market projection; dropped from clustering");
      continue;
    }
    out.stages.categories[basis.etf_class[static_cast<size_t>(c)]].push_back(c);
  }

  // Steps 3-4: per-category prototypes, then the union stage.
  std::vector<int> union_pool;
  for (const auto& [cls, cols] : out.stages.categories) {
    Eigen::MatrixXd sub(out.x_projected.rows(), static_cast<Eigen::Index>(cols.size()));
    for (size_t i = 0; i < cols.size(); ++i) {
      sub.col(static_cast<Eigen::Index>(i)) = out.x_projected.col(cols[i]);
    }
    auto dist = protoclust::corr_distance_matrix(sub);
    auto tree = protoclust::minimax_cluster(dist);
    auto protos = protoclust::cut_prototypes(tree, dist, config.cluster_threshold);
    auto& b = out.stages.per_category_prototypes[cls];
    for (int p : protos) b.push_back(cols[static_cast<size_t>(p)]);
    union_pool.insert(union_pool.end(), b.begin(), b.end());
  }
  std::sort(union_pool.begin(), union_pool.end());
  if (union_pool.size() == 1) {
    out.stages.union_prototypes = union_pool;
  } else if (!union_pool.empty()) {
    Eigen::MatrixXd sub(out.x_projected.rows(), static_cast<Eigen::Index>(union_pool.size()));
    for (size_t i = 0; i < union_pool.size(); ++i) {
      sub.col(static_cast<Eigen::Index>(i)) = out.x_projected.col(union_pool[i]);
    }
    auto dist = protoclust::corr_distance_matrix(sub);
    auto tree = protoclust::minimax_cluster(dist);
    auto protos = protoclust::cut_prototypes(tree, dist, config.cluster_threshold_union);
    for (int p : protos) {
      out.stages.union_prototypes.push_back(union_pool[static_cast<size_t>(p)]);
    }
  }

  // Step 5 candidate set: market, the other FF5 factors, and U.
  out.lasso_candidates.push_back(basis.market_col);
  for (int c = 0; c < static_cast<int>(basis.ids.size()); ++c) {
    if (basis.kinds[static_cast<size_t>(c)] != data::AssetKind::FF5Factor) continue;
    if (c == basis.market_col) continue;
    if (degenerate_column(out.x_projected.col(c))) {
      log::warn("factor column " + basis.ids[static_cast<size_t>(c)] +
                " is degenerate after market projection; dropped");
      continue;
    }
    out.lasso_candidates.push_back(c);
  }
  out.lasso_candidates.insert(out.lasso_candidates.end(), out.stages.union_prototypes.begin(),
                              out.stages.union_prototypes.end());
  out.basis = std::move(basis);
  return out;
}

GibsFit gibs_select(const Eigen::VectorXd& y, const PreparedBasis& prepared,
                    const GibsConfig& config, uint64_t seed) {
  const BasisPanel& basis = prepared.basis;
  if (y.size() != basis.x.rows()) {
    raise(ErrorKind::InvalidArgument, "gibs_select: y length must match the window");
  }

  const auto& candidates = prepared.lasso_candidates;
  Eigen::MatrixXd xc(prepared.x_projected.rows(),
                     static_cast<Eigen::Index>(candidates.size()));
  std::vector<double> weights(candidates.size(), 1.0);
  for (size_t i = 0; i < candidates.size(); ++i) {
    xc.col(static_cast<Eigen::Index>(i)) = prepared.x_projected.col(candidates[i]);
    if (config.force_market && candidates[i] == basis.market_col) weights[i] = 0.0;
  }

  auto path = lasso::lasso_path(y, xc, config.grid, weights);
  auto cv = lasso::cross_validate(y, xc, path, config.cv_folds, seed, weights);
  auto choice = lasso::gibs_lambda(path, cv, config.support_cap);

  GibsFit fit;
  fit.lambda = choice.lambda;
  std::set<int> selected;
  for (size_t i = 0; i < candidates.size(); ++i) {
    double b = path.coefs_std(static_cast<Eigen::Index>(i), choice.index);
    bool forced = config.force_market && candidates[i] == basis.market_col;
    if (forced || std::abs(b) > lasso::kSupportEps) selected.insert(candidates[i]);
  }
  fit.selected.assign(selected.begin(), selected.end());

  if (fit.selected.empty()) {
    log::warn("gibs_select: empty selection; falling back to intercept-only fit");
    fit.intercept_only = true;
    fit.ols = linreg::ols(y, Eigen::MatrixXd(y.size(), 0), /*with_intercept=*/true);
    fit.adj_r2 = fit.ols.adj_r2;
    return fit;
  }

  // Step 6: OLS on the unprojected selected columns.
  Eigen::MatrixXd xs(basis.x.rows(), static_cast<Eigen::Index>(fit.selected.size()));
  for (size_t i = 0; i < fit.selected.size(); ++i) {
    xs.col(static_cast<Eigen::Index>(i)) = basis.x.col(fit.selected[i]);
  }
  fit.ols = linreg::ols(y, xs, /*with_intercept=*/true);
  fit.adj_r2 = fit.ols.adj_r2;
  for (int j : linreg::significant_set(fit.ols, config.significance_level)) {
    fit.significant.push_back(fit.selected[static_cast<size_t>(j)]);
  }
  return fit;
}

int gibs_dimension(const data::ReturnsPanel& panel, const Date& date,
                   const GibsConfig& config, int window_weeks,
                   const data::UniverseFilters& filters) {
  int idx = panel.calendar().index_of(date);
  if (idx < 0 || idx + 1 < window_weeks) {
    raise(ErrorKind::InvalidArgument,
          "gibs_dimension: no " + std::to_string(window_weeks) + "-week window at " +
              date.to_string());
  }
  data::UniverseFilters f = filters;
  f.etf_window_weeks = window_weeks;
  auto universe = data::build_universe(panel, date, f);
  if (universe.eligible_etfs.empty()) return 0;
  std::vector<std::string> etfs(universe.eligible_etfs.begin(), universe.eligible_etfs.end());
  auto basis = build_basis_panel(panel, etfs, idx - window_weeks + 1, idx);
  auto prepared = prepare_basis(std::move(basis), config);
  return static_cast<int>(prepared.stages.union_prototypes.size());
}

int pca_dimension(const data::ReturnsPanel& panel, const Date& date, double variance_target,
                  int window_weeks, const data::UniverseFilters& filters) {
  int idx = panel.calendar().index_of(date);
  if (idx < 0 || idx + 1 < window_weeks) {
    raise(ErrorKind::InvalidArgument,
          "pca_dimension: no " + std::to_string(window_weeks) + "-week window at " +
              date.to_string());
  }
  data::UniverseFilters f = filters;
  f.etf_window_weeks = window_weeks;
  auto universe = data::build_universe(panel, date, f);
  if (universe.eligible_etfs.empty()) return 0;

  int first = idx - window_weeks + 1;
  Eigen::MatrixXd x(window_weeks, static_cast<Eigen::Index>(universe.eligible_etfs.size()));
  int j = 0;
  for (const auto& id : universe.eligible_etfs) {
    int col = panel.column_of(id);
    for (int w = 0; w < window_weeks; ++w) x(w, j) = panel.ret(first + w, col);
    ++j;
  }
  Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(window_weeks - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  Eigen::VectorXd eigs = solver.eigenvalues();  // ascending
  double total = eigs.sum();
  if (!(total > 0.0)) return 0;
  double cum = 0.0;
  int m = 0;
  for (Eigen::Index i = eigs.size() - 1; i >= 0; --i) {
    cum += eigs(i);
    ++m;
    if (cum / total >= variance_target - 1e-12) break;
  }
  return m;
}

namespace {

ModelReport make_report(const BasisPanel& basis, const GibsFit& fit,
                        const data::ReturnsPanel& panel, int eval_week,
                        double realized_excess) {
  ModelReport rep;
  rep.intercept_only = fit.intercept_only;
  rep.alpha = fit.ols.alpha;
  rep.alpha_p = fit.ols.alpha_p;
  rep.adj_r2 = fit.adj_r2;
  for (size_t i = 0; i < fit.selected.size(); ++i) {
    rep.selected.push_back(basis.ids[static_cast<size_t>(fit.selected[i])]);
    rep.betas.emplace_back(basis.ids[static_cast<size_t>(fit.selected[i])],
                           fit.ols.betas(static_cast<Eigen::Index>(i)));
  }
  for (int c : fit.significant) rep.significant.push_back(basis.ids[static_cast<size_t>(c)]);

  double r0 = panel.risk_free(eval_week);
  double pred = fit.ols.alpha;
  bool complete = true;
  for (size_t i = 0; i < fit.selected.size(); ++i) {
    int col = panel.column_of(basis.ids[static_cast<size_t>(fit.selected[i])]);
    if (!panel.observed(eval_week, col)) {
      complete = false;
      break;
    }
    pred += fit.ols.betas(static_cast<Eigen::Index>(i)) * (panel.ret(eval_week, col) - r0);
  }
  if (!complete) {
    log::warn("prediction unavailable at " + panel.calendar().at(eval_week).to_string() +
              ": selected basis asset missing");
    rep.prediction = kNaN;
    rep.residual = kNaN;
  } else {
    rep.prediction = pred;
    rep.residual = realized_excess - pred;
  }
  return rep;
}

SideRow compute_side(const Eigen::VectorXd& y_window, double realized_excess,
                     const std::vector<std::string>& members, const PreparedBasis& prepared,
                     const data::ReturnsPanel& panel, int eval_week,
                     const RollSettings& settings, uint64_t side_seed) {
  SideRow side;
  side.realized_excess = realized_excess;
  side.members = members;

  GibsFit amf = gibs_select(y_window, prepared, settings.gibs, side_seed);
  side.amf = make_report(prepared.basis, amf, panel, eval_week, realized_excess);

  // FF5 benchmark: plain OLS with intercept on the same window.
  const BasisPanel& basis = prepared.basis;
  Eigen::MatrixXd x_ff5 = basis.x.leftCols(5);
  GibsFit ff5;
  ff5.selected = {0, 1, 2, 3, 4};
  ff5.ols = linreg::ols(y_window, x_ff5, /*with_intercept=*/true);
  ff5.adj_r2 = ff5.ols.adj_r2;
  for (int j : linreg::significant_set(ff5.ols, settings.gibs.significance_level)) {
    ff5.significant.push_back(j);
  }
  side.ff5 = make_report(basis, ff5, panel, eval_week, realized_excess);

  // In-sample nested F: FF5 against FF5 plus the GIBS-selected ETFs.
  std::vector<int> extra;
  for (int c : amf.selected) {
    if (basis.kinds[static_cast<size_t>(c)] == data::AssetKind::Etf) extra.push_back(c);
  }
  if (extra.empty()) {
    side.amf_vs_ff5_anova_p = kNaN;
  } else {
    const Eigen::Index n = y_window.size();
    Eigen::MatrixXd restricted(n, 6);
    restricted.col(0).setOnes();
    restricted.rightCols(5) = x_ff5;
    Eigen::MatrixXd full(n, 6 + static_cast<Eigen::Index>(extra.size()));
    full.leftCols(6) = restricted;
    for (size_t i = 0; i < extra.size(); ++i) {
      full.col(6 + static_cast<Eigen::Index>(i)) = basis.x.col(extra[i]);
    }
    try {
      side.amf_vs_ff5_anova_p = linreg::anova_nested(y_window, restricted, full).p_value;
    } catch (const Error& e) {
      log::warn(std::string("in-sample ANOVA failed: ") + e.what());
      side.amf_vs_ff5_anova_p = kNaN;
    }
  }
  return side;
}

}  // namespace

WindowLedger run_rolling(const data::ReturnsPanel& panel, const data::EtfTaxonomy& taxonomy,
                         int eval_first, int eval_last, const RollSettings& settings) {
  if (eval_first > eval_last) {
    raise(ErrorKind::InvalidArgument, "run_rolling: empty evaluation period");
  }
  if (eval_first < settings.window_weeks) {
    raise(ErrorKind::InvalidArgument,
          "run_rolling: first evaluation week needs " + std::to_string(settings.window_weeks) +
              " prior weeks");
  }
  if (eval_last >= panel.n_weeks()) {
    raise(ErrorKind::InvalidArgument, "run_rolling: evaluation period exceeds calendar");
  }

  const int n_eval = eval_last - eval_first + 1;
  WindowLedger ledger;
  ledger.rows.resize(static_cast<size_t>(n_eval));

  for (int c = 0; c < panel.n_assets(); ++c) {
    const auto& m = panel.meta(c);
    AssetInfoLite info;
    info.kind = m.kind;
    if (m.etf_subclass) {
      info.subclass = *m.etf_subclass;
      info.merged_class = taxonomy.merged_class(*m.etf_subclass);
    }
    ledger.asset_info[m.asset_id] = info;
  }

  data::UniverseFilters filters;
  filters.vol_lookback_weeks = settings.vol_lookback_weeks;
  filters.etf_window_weeks = settings.window_weeks;
  filters.top_n_by_cap = settings.universe_top_n;

  auto compute_week = [&](int i) {
    LedgerRow row;
    const int e = eval_first + i;
    const int rank_idx = e - 1;
    const int w_first = e - settings.window_weeks;
    const int w_last = e - 1;
    row.week = panel.calendar().at(e);
    row.window_start = panel.calendar().at(w_first);
    row.window_end = panel.calendar().at(w_last);

    auto universe = data::build_universe(panel, panel.calendar().at(rank_idx), filters);
    std::vector<std::string> stocks(universe.eligible_stocks.begin(),
                                    universe.eligible_stocks.end());
    auto ranking = portfolio::trailing_vol(panel, panel.calendar().at(rank_idx), stocks,
                                           settings.vol_lookback_weeks);
    auto ports = portfolio::form_portfolios(ranking, settings.quartile_fraction);
    std::vector<std::string> low(ports.low_ids.begin(), ports.low_ids.end());
    std::vector<std::string> high(ports.high_ids.begin(), ports.high_ids.end());

    std::vector<std::string> etfs(universe.eligible_etfs.begin(),
                                  universe.eligible_etfs.end());
    if (etfs.empty()) raise(ErrorKind::Data, "no eligible ETFs in window");
    auto prepared =
        prepare_basis(build_basis_panel(panel, etfs, w_first, w_last), settings.gibs);

    // Window response: the current constituents' equal-weighted excess
    // returns over the window; the realized evaluation-week value extends
    // the same series one week ahead.
    auto window_series = [&](const std::vector<std::string>& ids) {
      Eigen::VectorXd y(settings.window_weeks);
      for (int w = 0; w < settings.window_weeks; ++w) {
        y(w) = portfolio::equal_weight_return(panel, w_first + w, ids) -
               panel.risk_free(w_first + w);
      }
      return y;
    };
    Eigen::VectorXd y_low = window_series(low);
    Eigen::VectorXd y_high = window_series(high);
    double realized_low =
        portfolio::equal_weight_return(panel, e, low) - panel.risk_free(e);
    double realized_high =
        portfolio::equal_weight_return(panel, e, high) - panel.risk_free(e);

    row.low = compute_side(y_low, realized_low, low, prepared, panel, e, settings,
                           derive_seed(settings.gibs.seed, static_cast<uint64_t>(e), 0));
    row.high = compute_side(y_high, realized_high, high, prepared, panel, e, settings,
                            derive_seed(settings.gibs.seed, static_cast<uint64_t>(e), 1));

    row.etf_count = static_cast<int>(etfs.size());
    row.gibs_dim = static_cast<int>(prepared.stages.union_prototypes.size());
    row.pca_dim = pca_dimension(panel, panel.calendar().at(w_last),
                                settings.pca_variance_target, settings.window_weeks, filters);
    for (int c : prepared.stages.union_prototypes) {
      row.union_prototype_ids.push_back(prepared.basis.ids[static_cast<size_t>(c)]);
    }
    return row;
  };

  int jobs = settings.jobs > 0 ? settings.jobs
                               : static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min(jobs, n_eval));

  std::atomic<int> next{0};
  auto worker = [&] {
    while (true) {
      int i = next.fetch_add(1);
      if (i >= n_eval) break;
      try {
        ledger.rows[static_cast<size_t>(i)] = compute_week(i);
      } catch (const Error& e) {
        LedgerRow row;
        row.week = panel.calendar().at(eval_first + i);
        row.failed = true;
        row.failure = e.what();
        log::warn("week " + row.week.to_string() + " failed: " + row.failure);
        ledger.rows[static_cast<size_t>(i)] = std::move(row);
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(jobs));
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return ledger;
}

void write_ledger_jsonl(const WindowLedger& ledger, const std::string& path) {
  using ordered_json = nlohmann::ordered_json;
  std::ofstream out(path);
  if (!out) raise(ErrorKind::Io, "cannot write " + path);

  auto model_json = [](const ModelReport& m) {
    ordered_json j;
    j["selected"] = m.selected;
    j["significant"] = m.significant;
    j["alpha"] = m.alpha;
    j["alpha_p"] = m.alpha_p;
    ordered_json betas = ordered_json::object();
    for (const auto& [id, b] : m.betas) betas[id] = b;
    j["betas"] = std::move(betas);
    j["adj_r2"] = m.adj_r2;
    if (std::isnan(m.prediction)) {
      j["prediction"] = nullptr;
      j["residual"] = nullptr;
    } else {
      j["prediction"] = m.prediction;
      j["residual"] = m.residual;
    }
    if (m.intercept_only) j["intercept_only"] = true;
    return j;
  };
  auto side_json = [&](const SideRow& s) {
    ordered_json j;
    j["realized_excess"] = s.realized_excess;
    j["amf"] = model_json(s.amf);
    j["ff5"] = model_json(s.ff5);
    if (std::isnan(s.amf_vs_ff5_anova_p)) {
      j["amf_vs_ff5_anova_p"] = nullptr;
    } else {
      j["amf_vs_ff5_anova_p"] = s.amf_vs_ff5_anova_p;
    }
    return j;
  };

  for (const auto& row : ledger.rows) {
    ordered_json j;
    j["week"] = row.week.to_string();
    if (row.failed) {
      j["error"] = row.failure;
    } else {
      j["window_start"] = row.window_start.to_string();
      j["window_end"] = row.window_end.to_string();
      j["low"] = side_json(row.low);
      j["high"] = side_json(row.high);
      ordered_json dims;
      dims["etf_count"] = row.etf_count;
      dims["gibs_dim"] = row.gibs_dim;
      dims["pca_dim"] = row.pca_dim;
      j["dims"] = std::move(dims);
      j["union_prototypes"] = row.union_prototype_ids;
    }
    out << j.dump() << "\n";
  }
  if (!out) raise(ErrorKind::Io, "write failed: " + path);
}

}  // namespace amf::gibs
