#include "core/stats.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "core/common.hpp"
#include "core/csv.hpp"
#include "core/dist.hpp"
#include "core/log.hpp"
#include "core/portfolio.hpp"

namespace amf::stats {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_var(const std::vector<double>& xs, double mean) {
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

const gibs::ModelReport& model_of(const gibs::SideRow& side, Model model) {
  return model == Model::Amf ? side.amf : side.ff5;
}

const gibs::SideRow& side_of(const gibs::LedgerRow& row, Side side) {
  return side == Side::Low ? row.low : row.high;
}

std::vector<const gibs::LedgerRow*> ok_rows(const gibs::WindowLedger& ledger) {
  std::vector<const gibs::LedgerRow*> rows;
  for (const auto& row : ledger.rows) {
    if (row.failed) {
      log::warn("ledger row " + row.week.to_string() + " failed; skipped in reports");
      continue;
    }
    rows.push_back(&row);
  }
  if (rows.empty()) raise(ErrorKind::Data, "ledger has no successful rows");
  return rows;
}

}  // namespace

WelchResult welch_test(const std::vector<double>& series_low,
                       const std::vector<double>& series_high) {
  size_t nl = series_low.size(), nh = series_high.size();
  if (nl < 2 || nh < 2) {
    raise(ErrorKind::InvalidArgument, "welch_test: each series needs length >= 2");
  }
  WelchResult out;
  out.mean_low = mean_of(series_low);
  out.mean_high = mean_of(series_high);
  double vl = sample_var(series_low, out.mean_low);
  double vh = sample_var(series_high, out.mean_high);
  double a = vl / static_cast<double>(nl);
  double b = vh / static_cast<double>(nh);
  if (a + b <= 0.0) {
    raise(ErrorKind::Numeric, "welch_test: both series have zero variance");
  }
  out.t_stat = (out.mean_low - out.mean_high) / std::sqrt(a + b);
  out.df = (a + b) * (a + b) /
           (a * a / static_cast<double>(nl - 1) + b * b / static_cast<double>(nh - 1));
  out.p_value = dist::student_t_sf(out.t_stat, out.df);
  return out;
}

std::vector<double> realized_series(const gibs::WindowLedger& ledger, Side side) {
  std::vector<double> out;
  for (const auto* row : ok_rows(ledger)) out.push_back(side_of(*row, side).realized_excess);
  return out;
}

std::vector<double> residual_series(const gibs::WindowLedger& ledger, Side side, Model model) {
  std::vector<double> out;
  for (const auto* row : ok_rows(ledger)) {
    out.push_back(model_of(side_of(*row, side), model).residual);
  }
  return out;
}

std::vector<double> prediction_series(const gibs::WindowLedger& ledger, Side side,
                                      Model model) {
  std::vector<double> out;
  for (const auto* row : ok_rows(ledger)) {
    out.push_back(model_of(side_of(*row, side), model).prediction);
  }
  return out;
}

std::vector<ResidualTestRow> residual_anomaly_tests(const gibs::WindowLedger& ledger,
                                                    bool on_returns) {
  struct Spec {
    const char* label;
    std::vector<double> low;
    std::vector<double> high;
  };
  std::vector<Spec> specs;
  specs.push_back({"excess_return", realized_series(ledger, Side::Low),
                   realized_series(ledger, Side::High)});
  specs.push_back({"ff5_residual", residual_series(ledger, Side::Low, Model::Ff5),
                   residual_series(ledger, Side::High, Model::Ff5)});
  specs.push_back({"amf_residual", residual_series(ledger, Side::Low, Model::Amf),
                   residual_series(ledger, Side::High, Model::Amf)});

  std::vector<ResidualTestRow> out;
  for (auto& spec : specs) {
    for (double v : spec.low) {
      if (std::isnan(v)) raise(ErrorKind::Data, "residual test: missing residual entries");
    }
    for (double v : spec.high) {
      if (std::isnan(v)) raise(ErrorKind::Data, "residual test: missing residual entries");
    }
    ResidualTestRow row;
    row.label = spec.label;
    auto cap_low = portfolio::cumulative_capital(spec.low);
    auto cap_high = portfolio::cumulative_capital(spec.high);
    row.low_total = cap_low.back() - 1.0;
    row.high_total = cap_high.back() - 1.0;
    row.diff = row.low_total - row.high_total;
    row.welch = on_returns ? welch_test(spec.low, spec.high) : welch_test(cap_low, cap_high);
    out.push_back(std::move(row));
  }
  return out;
}

InterceptPvals intercept_pvalues(const gibs::WindowLedger& ledger) {
  InterceptPvals out;
  for (const auto* row : ok_rows(ledger)) {
    out.low_ff5.push_back(row->low.ff5.alpha_p);
    out.low_amf.push_back(row->low.amf.alpha_p);
    out.high_ff5.push_back(row->high.ff5.alpha_p);
    out.high_amf.push_back(row->high.amf.alpha_p);
  }
  return out;
}

FdrResult fdr_adjust_raw(const std::vector<double>& p_values) {
  const size_t m = p_values.size();
  if (m == 0) raise(ErrorKind::InvalidArgument, "fdr_adjust: empty p-value vector");
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) {
      raise(ErrorKind::InvalidArgument, "fdr_adjust: p-values must lie in [0, 1]");
    }
  }
  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (p_values[a] != p_values[b]) return p_values[a] < p_values[b];
    return a < b;
  });

  double c_m = 0.0;
  for (size_t k = 1; k <= m; ++k) c_m += 1.0 / static_cast<double>(k);

  FdrResult out;
  out.p_values = p_values;
  out.bh_q.resize(m);
  out.bhy_q.resize(m);
  double running = std::numeric_limits<double>::infinity();
  for (size_t i = m; i-- > 0;) {
    double rank = static_cast<double>(i + 1);
    double candidate = static_cast<double>(m) * p_values[order[i]] / rank;
    running = std::min(running, candidate);
    out.bh_q[order[i]] = running;
    out.bhy_q[order[i]] = running * c_m;
  }
  return out;
}

FdrResult fdr_adjust(const std::vector<double>& p_values) {
  FdrResult out = fdr_adjust_raw(p_values);
  for (double& q : out.bh_q) q = std::min(q, 1.0);
  for (double& q : out.bhy_q) q = std::min(q, 1.0);
  return out;
}

std::vector<InterceptReportRow> intercept_report(const InterceptPvals& pvals, double level) {
  auto pct_below = [level](const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    int count = 0;
    for (double x : xs) count += x < level ? 1 : 0;
    return 100.0 * count / static_cast<double>(xs.size());
  };
  auto q_pct_below = [&](const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    return pct_below(fdr_adjust(xs).bhy_q);
  };
  std::vector<InterceptReportRow> out;
  out.push_back({"High", pct_below(pvals.high_ff5), pct_below(pvals.high_amf),
                 q_pct_below(pvals.high_ff5), q_pct_below(pvals.high_amf)});
  out.push_back({"Low", pct_below(pvals.low_ff5), pct_below(pvals.low_amf),
                 q_pct_below(pvals.low_ff5), q_pct_below(pvals.low_amf)});
  return out;
}

linreg::AnovaResult factor_difference_test(const Eigen::VectorXd& y_low,
                                           const Eigen::VectorXd& y_high,
                                           const Eigen::MatrixXd& x,
                                           const std::vector<int>& s_low,
                                           const std::vector<int>& s_high) {
  if (y_low.size() != y_high.size() || y_low.size() != x.rows()) {
    raise(ErrorKind::InvalidArgument, "factor_difference_test: length mismatch");
  }
  std::set<int> s_union(s_low.begin(), s_low.end());
  s_union.insert(s_high.begin(), s_high.end());
  if (s_union.empty()) {
    raise(ErrorKind::InvalidArgument, "factor_difference_test: S_low u S_high is empty");
  }
  for (int c : s_union) {
    if (c < 0 || c >= x.cols()) {
      raise(ErrorKind::InvalidArgument, "factor_difference_test: column index out of range");
    }
  }

  const Eigen::Index n = y_low.size();
  const Eigen::Index k = static_cast<Eigen::Index>(s_union.size());
  Eigen::VectorXd z(2 * n);
  z.head(n) = y_low;
  z.tail(n) = y_high;

  Eigen::MatrixXd w_s(2 * n, k);
  Eigen::Index j = 0;
  for (int c : s_union) {
    w_s.col(j).head(n) = x.col(c);
    w_s.col(j).tail(n) = x.col(c);
    ++j;
  }
  // Interaction block: W_S element-wise scaled by the high indicator, which
  // zeroes the low half and repeats X_S in the high half.
  Eigen::MatrixXd full(2 * n, 2 * k);
  full.leftCols(k) = w_s;
  full.rightCols(k).setZero();
  full.block(n, k, n, k) = w_s.bottomRows(n);

  return linreg::anova_nested(z, w_s, full);
}

HeatmapMatrix heatmap(const gibs::WindowLedger& ledger, Side side, bool share_mode) {
  auto rows = ok_rows(ledger);

  // Row set: every merged class seen in the asset info, then the FF5 factors.
  std::set<std::string> merged;
  for (const auto& [id, info] : ledger.asset_info) {
    if (info.kind == data::AssetKind::Etf) merged.insert(info.merged_class);
  }
  std::vector<std::string> row_labels(merged.begin(), merged.end());
  for (const auto& id : data::ff5_ids()) row_labels.push_back(id);
  std::map<std::string, int> row_of;
  for (size_t i = 0; i < row_labels.size(); ++i) {
    row_of[row_labels[i]] = static_cast<int>(i);
  }

  // Column per half-year, in chronological order.
  std::vector<std::string> col_labels;
  std::map<std::string, int> col_of;
  for (const auto* row : rows) {
    std::string bucket = half_year_bucket(row->week);
    if (col_of.emplace(bucket, static_cast<int>(col_labels.size())).second) {
      col_labels.push_back(bucket);
    }
  }

  Eigen::MatrixXd hits =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(row_labels.size()),
                            static_cast<Eigen::Index>(col_labels.size()));
  Eigen::VectorXd week_counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(col_labels.size()));
  Eigen::VectorXd slot_counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(col_labels.size()));

  for (const auto* row : rows) {
    int col = col_of.at(half_year_bucket(row->week));
    week_counts(col) += 1.0;
    const auto& sig = side_of(*row, side).amf.significant;
    slot_counts(col) += static_cast<double>(sig.size());
    std::set<std::string> touched;
    for (const auto& id : sig) {
      auto it = ledger.asset_info.find(id);
      if (it == ledger.asset_info.end()) continue;
      std::string label =
          it->second.kind == data::AssetKind::Etf ? it->second.merged_class : id;
      if (share_mode) {
        hits(row_of.at(label), col) += 1.0;  // one unit per significant slot
      } else {
        touched.insert(label);
      }
    }
    if (!share_mode) {
      for (const auto& label : touched) hits(row_of.at(label), col) += 1.0;
    }
  }

  HeatmapMatrix out;
  out.row_labels = std::move(row_labels);
  out.col_labels = std::move(col_labels);
  out.cells = hits;
  for (Eigen::Index c = 0; c < out.cells.cols(); ++c) {
    double denom = share_mode ? slot_counts(c) : week_counts(c);
    if (denom > 0.0) out.cells.col(c) /= denom;
  }
  return out;
}

CountsTable counts_table(const gibs::WindowLedger& ledger) {
  auto rows = ok_rows(ledger);
  auto accumulate_side = [&](Side side) {
    CountsRow acc;
    for (const auto* row : rows) {
      const auto& rep = side_of(*row, side).amf;
      auto is_ff5 = [&](const std::string& id) {
        auto it = ledger.asset_info.find(id);
        return it != ledger.asset_info.end() && it->second.kind == data::AssetKind::FF5Factor;
      };
      int sel_ff5 = 0, sig_ff5 = 0;
      for (const auto& id : rep.selected) sel_ff5 += is_ff5(id) ? 1 : 0;
      for (const auto& id : rep.significant) sig_ff5 += is_ff5(id) ? 1 : 0;
      acc.selected += static_cast<double>(rep.selected.size());
      acc.ff5_selected += sel_ff5;
      acc.etf_selected += static_cast<double>(rep.selected.size()) - sel_ff5;
      acc.significant += static_cast<double>(rep.significant.size());
      acc.ff5_significant += sig_ff5;
      acc.etf_significant += static_cast<double>(rep.significant.size()) - sig_ff5;
    }
    double n = static_cast<double>(rows.size());
    acc.selected /= n;
    acc.ff5_selected /= n;
    acc.etf_selected /= n;
    acc.significant /= n;
    acc.ff5_significant /= n;
    acc.etf_significant /= n;
    return acc;
  };

  CountsTable out;
  out.low = accumulate_side(Side::Low);
  out.high = accumulate_side(Side::High);
  out.difference = {out.high.selected - out.low.selected,
                    out.high.ff5_selected - out.low.ff5_selected,
                    out.high.etf_selected - out.low.etf_selected,
                    out.high.significant - out.low.significant,
                    out.high.ff5_significant - out.low.ff5_significant,
                    out.high.etf_significant - out.low.etf_significant};
  return out;
}

double oos_r2(const gibs::WindowLedger& ledger, Side side, Model model) {
  auto realized = realized_series(ledger, side);
  auto predictions = prediction_series(ledger, side, model);
  double ybar = mean_of(realized);
  double sse = 0.0, sst = 0.0;
  for (size_t i = 0; i < realized.size(); ++i) {
    if (std::isnan(predictions[i])) {
      raise(ErrorKind::Data, "oos_r2: missing prediction in ledger");
    }
    sse += (realized[i] - predictions[i]) * (realized[i] - predictions[i]);
    sst += (realized[i] - ybar) * (realized[i] - ybar);
  }
  if (!(sst > 0.0)) raise(ErrorKind::Numeric, "oos_r2: zero variation in realized returns");
  return 1.0 - sse / sst;
}

std::vector<RiskPremiumRow> risk_premia(const data::ReturnsPanel& panel,
                                        const std::vector<std::string>& ids, int first_week,
                                        int last_week) {
  // FF5 floor: the smallest absolute FF5 premium over the same period.
  double floor = std::numeric_limits<double>::infinity();
  std::map<std::string, double> ff5_premium;
  for (const auto& id : data::ff5_ids()) {
    Eigen::MatrixXd x = panel.excess_returns(std::vector<std::string>{id}, first_week, last_week);
    double premium = 52.0 * x.col(0).mean() * 100.0;
    ff5_premium[id] = premium;
    floor = std::min(floor, std::abs(premium));
  }

  std::vector<RiskPremiumRow> out;
  for (const auto& id : ids) {
    int col = panel.column_of(id);
    if (col < 0) raise(ErrorKind::Data, "risk_premia: unknown asset " + id);
    Eigen::MatrixXd x = panel.excess_returns(std::vector<std::string>{id}, first_week, last_week);
    if (x.col(0).hasNaN()) {
      raise(ErrorKind::Data, "risk_premia: " + id + " is incomplete over the period");
    }
    RiskPremiumRow row;
    row.name = id;
    const auto& meta = panel.meta(col);
    row.category = meta.kind == data::AssetKind::Etf ? meta.etf_subclass.value_or("")
                                                     : asset_kind_name(meta.kind);
    row.premium_pct = 52.0 * x.col(0).mean() * 100.0;
    row.exceeds_ff5_floor = std::abs(row.premium_pct) > floor;
    out.push_back(std::move(row));
  }
  std::sort(out.begin(), out.end(), [](const RiskPremiumRow& a, const RiskPremiumRow& b) {
    if (std::abs(a.premium_pct) != std::abs(b.premium_pct)) {
      return std::abs(a.premium_pct) > std::abs(b.premium_pct);
    }
    return a.name < b.name;
  });
  return out;
}

void write_reports(const std::string& report_dir, const gibs::WindowLedger& ledger,
                   const linreg::AnovaResult* anova,
                   const std::vector<RiskPremiumRow>& premia, const ReportOptions& options) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(report_dir, ec);
  if (ec) raise(ErrorKind::Io, "cannot create report directory " + report_dir);
  auto path = [&](const char* name) { return report_dir + "/" + name; };
  auto rows = ok_rows(ledger);

  {
    auto tests = residual_anomaly_tests(ledger, options.welch_on_returns);
    csv::Writer w(path("residual_tests.csv"));
    w.row({"series", "low", "high", "low_minus_high", "t_stat", "df", "p_value"});
    for (const auto& t : tests) {
      w.row({t.label, csv::fmt(t.low_total), csv::fmt(t.high_total), csv::fmt(t.diff),
             csv::fmt(t.welch.t_stat), csv::fmt(t.welch.df), csv::fmt(t.welch.p_value)});
    }
    w.close();
  }
  {
    csv::Writer w(path("anova.csv"));
    w.row({"model", "res_df", "rss", "df_diff", "sum_sq", "f_stat", "p_value"});
    if (anova != nullptr) {
      w.row({"model1", std::to_string(anova->res_df_1), csv::fmt(anova->rss_1), "", "", "", ""});
      w.row({"model2", std::to_string(anova->res_df_2), csv::fmt(anova->rss_2),
             std::to_string(anova->df_diff), csv::fmt(anova->sum_sq_diff),
             csv::fmt(anova->f_stat), csv::fmt(anova->p_value)});
    }
    w.close();
  }
  {
    auto report = intercept_report(intercept_pvalues(ledger), options.significance_level);
    csv::Writer w(path("intercept_fdr.csv"));
    w.row({"portfolio", "ff5_p_lt_level_pct", "amf_p_lt_level_pct", "ff5_bhy_q_lt_level_pct",
           "amf_bhy_q_lt_level_pct"});
    for (const auto& r : report) {
      w.row({r.portfolio, csv::fmt(r.ff5_p_pct), csv::fmt(r.amf_p_pct), csv::fmt(r.ff5_q_pct),
             csv::fmt(r.amf_q_pct)});
    }
    w.close();
  }
  {
    auto counts = counts_table(ledger);
    csv::Writer w(path("counts.csv"));
    w.row({"portfolio", "select", "ff5_select", "etf_select", "signif", "ff5_signif",
           "etf_signif"});
    auto emit = [&](const char* label, const CountsRow& r) {
      w.row({label, csv::fmt(r.selected), csv::fmt(r.ff5_selected), csv::fmt(r.etf_selected),
             csv::fmt(r.significant), csv::fmt(r.ff5_significant),
             csv::fmt(r.etf_significant)});
    };
    emit("Low", counts.low);
    emit("High", counts.high);
    emit("Difference", counts.difference);
    w.close();
  }
  for (Side side : {Side::Low, Side::High}) {
    auto hm = heatmap(ledger, side, options.heatmap_share_mode);
    csv::Writer w(path(side == Side::Low ? "heatmap_low.csv" : "heatmap_high.csv"));
    std::vector<std::string> header = {"class"};
    header.insert(header.end(), hm.col_labels.begin(), hm.col_labels.end());
    w.row(header);
    for (size_t r = 0; r < hm.row_labels.size(); ++r) {
      std::vector<std::string> fields = {hm.row_labels[r]};
      for (Eigen::Index c = 0; c < hm.cells.cols(); ++c) {
        fields.push_back(csv::fmt(hm.cells(static_cast<Eigen::Index>(r), c)));
      }
      w.row(fields);
    }
    w.close();
  }
  {
    csv::Writer w(path("risk_premia.csv"));
    w.row({"name", "category", "annual_premium_pct", "exceeds_ff5_floor"});
    for (const auto& r : premia) {
      w.row({r.name, r.category, csv::fmt(r.premium_pct), r.exceeds_ff5_floor ? "1" : "0"});
    }
    w.close();
  }
  {
    // In-sample adjusted R^2 and weekly nested-F ratios, plus OOS R^2.
    csv::Writer w(path("gof.csv"));
    w.row({"portfolio", "ff5_adj_r2_mean", "amf_adj_r2_mean", "adj_r2_change_pct",
           "anova_p_lt_level_ratio", "anova_bhy_q_lt_level_ratio", "ff5_oos_r2", "amf_oos_r2",
           "oos_r2_change_pct"});
    for (Side side : {Side::Low, Side::High}) {
      double ff5_sum = 0.0, amf_sum = 0.0;
      std::vector<double> anova_ps;
      for (const auto* row : rows) {
        const auto& s = side_of(*row, side);
        ff5_sum += s.ff5.adj_r2;
        amf_sum += s.amf.adj_r2;
        if (!std::isnan(s.amf_vs_ff5_anova_p)) anova_ps.push_back(s.amf_vs_ff5_anova_p);
      }
      double n = static_cast<double>(rows.size());
      double ff5_mean = ff5_sum / n, amf_mean = amf_sum / n;
      double p_ratio = 0.0, q_ratio = 0.0;
      if (!anova_ps.empty()) {
        int p_hits = 0, q_hits = 0;
        auto fdr = fdr_adjust(anova_ps);
        for (size_t i = 0; i < anova_ps.size(); ++i) {
          p_hits += anova_ps[i] < options.significance_level ? 1 : 0;
          q_hits += fdr.bhy_q[i] < options.significance_level ? 1 : 0;
        }
        p_ratio = static_cast<double>(p_hits) / static_cast<double>(anova_ps.size());
        q_ratio = static_cast<double>(q_hits) / static_cast<double>(anova_ps.size());
      }
      double ff5_oos = oos_r2(ledger, side, Model::Ff5);
      double amf_oos = oos_r2(ledger, side, Model::Amf);
      w.row({side == Side::Low ? "Low" : "High", csv::fmt(ff5_mean), csv::fmt(amf_mean),
             csv::fmt(ff5_mean != 0.0 ? 100.0 * (amf_mean - ff5_mean) / std::abs(ff5_mean)
                                      : kNaN),
             csv::fmt(p_ratio), csv::fmt(q_ratio), csv::fmt(ff5_oos), csv::fmt(amf_oos),
             csv::fmt(ff5_oos != 0.0 ? 100.0 * (amf_oos - ff5_oos) / std::abs(ff5_oos)
                                     : kNaN)});
    }
    w.close();
  }
  {
    struct CumSpec {
      const char* file;
      std::vector<double> low;
      std::vector<double> high;
    };
    std::vector<CumSpec> specs;
    specs.push_back({"cumcap_excess.csv", realized_series(ledger, Side::Low),
                     realized_series(ledger, Side::High)});
    specs.push_back({"cumcap_ff5.csv", residual_series(ledger, Side::Low, Model::Ff5),
                     residual_series(ledger, Side::High, Model::Ff5)});
    specs.push_back({"cumcap_amf.csv", residual_series(ledger, Side::Low, Model::Amf),
                     residual_series(ledger, Side::High, Model::Amf)});
    for (auto& spec : specs) {
      auto cap_low = portfolio::cumulative_capital(spec.low);
      auto cap_high = portfolio::cumulative_capital(spec.high);
      csv::Writer w(path(spec.file));
      w.row({"date", "low", "high"});
      size_t i = 0;
      for (const auto* row : rows) {
        w.row({row->week.to_string(), csv::fmt(cap_low[i]), csv::fmt(cap_high[i])});
        ++i;
      }
      w.close();
    }
  }
  {
    csv::Writer w(path("dimensions.csv"));
    w.row({"date", "etf_count", "gibs_dim", "pca_dim"});
    for (const auto* row : rows) {
      w.row({row->week.to_string(), std::to_string(row->etf_count),
             std::to_string(row->gibs_dim), std::to_string(row->pca_dim)});
    }
    w.close();
  }
}

}  // namespace amf::stats
