#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "core/gibs.hpp"
#include "core/linreg.hpp"
#include "core/panel.hpp"

namespace amf::stats {

enum class Side { Low, High };
enum class Model { Amf, Ff5 };

struct WelchResult {
  double mean_low = 0.0;
  double mean_high = 0.0;
  double t_stat = 0.0;
  double df = 0.0;      // Welch-Satterthwaite
  double p_value = 1.0; // one-sided, H_A: mu_low > mu_high
};

WelchResult welch_test(const std::vector<double>& series_low,
                       const std::vector<double>& series_high);

// Table-2-shaped rows: the Welch test applied to the cumulative-capital
// series of excess returns, FF5 residuals, and AMF residuals. `low_total`
// and `high_total` report final capital minus 1. With `on_returns` the test
// runs on the weekly series instead of the compounded capital.
struct ResidualTestRow {
  std::string label;
  double low_total = 0.0;
  double high_total = 0.0;
  double diff = 0.0;
  WelchResult welch;
};

std::vector<ResidualTestRow> residual_anomaly_tests(const gibs::WindowLedger& ledger,
                                                    bool on_returns = false);

// Weekly series pulled off the ledger (failed rows raise a Data error).
std::vector<double> realized_series(const gibs::WindowLedger& ledger, Side side);
std::vector<double> residual_series(const gibs::WindowLedger& ledger, Side side, Model model);
std::vector<double> prediction_series(const gibs::WindowLedger& ledger, Side side, Model model);

struct InterceptPvals {
  std::vector<double> low_ff5;
  std::vector<double> low_amf;
  std::vector<double> high_ff5;
  std::vector<double> high_amf;
};

InterceptPvals intercept_pvalues(const gibs::WindowLedger& ledger);

struct FdrResult {
  std::vector<double> p_values;
  std::vector<double> bh_q;
  std::vector<double> bhy_q;
};

// Benjamini-Hochberg step-up q-values and the Benjamini-Hochberg-Yekutieli
// variant inflated by c(m) = sum_{k<=m} 1/k.
FdrResult fdr_adjust(const std::vector<double>& p_values);
// Pre-clamp values (may exceed 1); bhy_q = bh_q * c(m) exactly here.
FdrResult fdr_adjust_raw(const std::vector<double>& p_values);

struct InterceptReportRow {
  std::string portfolio;  // "High" / "Low"
  double ff5_p_pct = 0.0;
  double amf_p_pct = 0.0;
  double ff5_q_pct = 0.0;  // BHY q
  double amf_q_pct = 0.0;
};

std::vector<InterceptReportRow> intercept_report(const InterceptPvals& pvals,
                                                 double level = 0.05);

// Stacks the two portfolios and tests the interaction block
// W_S (.) (h 1') against the shared-coefficient model; the designs carry no
// intercept. S = S_low u S_high indexes columns of x.
linreg::AnovaResult factor_difference_test(const Eigen::VectorXd& y_low,
                                           const Eigen::VectorXd& y_high,
                                           const Eigen::MatrixXd& x,
                                           const std::vector<int>& s_low,
                                           const std::vector<int>& s_high);

struct HeatmapMatrix {
  std::vector<std::string> row_labels;  // merged ETF classes + FF5 factors
  std::vector<std::string> col_labels;  // half-year buckets
  Eigen::MatrixXd cells;                // fractions in [0, 1]
};

// cell(class, half-year) = fraction of that half-year's weeks whose
// significant set touches the class; `share_mode` instead reports the
// class's share of significant slots.
HeatmapMatrix heatmap(const gibs::WindowLedger& ledger, Side side, bool share_mode = false);

struct CountsRow {
  double selected = 0.0;
  double ff5_selected = 0.0;
  double etf_selected = 0.0;
  double significant = 0.0;
  double ff5_significant = 0.0;
  double etf_significant = 0.0;
};

struct CountsTable {
  CountsRow low;
  CountsRow high;
  CountsRow difference;  // high - low
};

CountsTable counts_table(const gibs::WindowLedger& ledger);

// 1 - sum (y - yhat)^2 / sum (y - ybar)^2 over the evaluation weeks.
double oos_r2(const gibs::WindowLedger& ledger, Side side, Model model);

struct RiskPremiumRow {
  std::string name;
  std::string category;
  double premium_pct = 0.0;  // 52 x mean weekly excess, in percent
  bool exceeds_ff5_floor = false;
};

std::vector<RiskPremiumRow> risk_premia(const data::ReturnsPanel& panel,
                                        const std::vector<std::string>& ids, int first_week,
                                        int last_week);

struct ReportOptions {
  bool welch_on_returns = false;
  bool heatmap_share_mode = false;
  double significance_level = 0.05;
};

// Writes the report/ directory next to the ledger: residual_tests.csv,
// anova.csv, intercept_fdr.csv, counts.csv, heatmap_{low,high}.csv,
// risk_premia.csv, gof.csv, cumcap_{excess,ff5,amf}.csv, dimensions.csv.
void write_reports(const std::string& report_dir, const gibs::WindowLedger& ledger,
                   const linreg::AnovaResult* anova,
                   const std::vector<RiskPremiumRow>& premia, const ReportOptions& options);

}  // namespace amf::stats
