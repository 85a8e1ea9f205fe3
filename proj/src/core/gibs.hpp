#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "core/lasso.hpp"
#include "core/linreg.hpp"
#include "core/panel.hpp"
#include "core/portfolio.hpp"
#include "core/taxonomy.hpp"

namespace amf::gibs {

struct GibsConfig {
  double cluster_threshold = 0.5;        // per-category prototype stage
  double cluster_threshold_union = 0.5;  // union stage
  lasso::GridSpec grid;
  int cv_folds = 10;
  int support_cap = 20;  // penalized coefficients only
  double significance_level = 0.05;
  bool force_market = true;  // market is unpenalized and never projected
  uint64_t seed = 0;
};

// Candidate basis over one regression window: the five FF5 factors first
// (market in column 0), then the eligible ETFs.
struct BasisPanel {
  Eigen::MatrixXd x;  // window excess returns, one column per basis asset
  std::vector<std::string> ids;
  std::vector<data::AssetKind> kinds;
  std::vector<std::string> etf_class;  // empty for factor columns
  int market_col = 0;
};

// Outputs of GIBS steps 2-4 on the projected basis.
struct BasisSetStages {
  std::map<std::string, std::vector<int>> categories;               // A_i
  std::map<std::string, std::vector<int>> per_category_prototypes;  // B_i
  std::vector<int> union_prototypes;                                // U (ETF columns)
};

struct PreparedBasis {
  BasisPanel basis;
  Eigen::MatrixXd x_projected;     // market column unchanged
  std::vector<int> lasso_candidates;  // market + FF5 + U, minus degenerates
  BasisSetStages stages;
};

PreparedBasis prepare_basis(BasisPanel basis, const GibsConfig& config);

struct GibsFit {
  std::vector<int> selected;     // basis columns, ascending; houses S_i
  std::vector<int> significant;  // houses S_i*
  linreg::OlsFit ols;            // step 6 on unprojected columns, with intercept
  double adj_r2 = 0.0;
  double lambda = 0.0;
  bool intercept_only = false;
};

// Steps 1-6 for one response. The CV fold assignment is drawn from `seed`.
GibsFit gibs_select(const Eigen::VectorXd& y, const PreparedBasis& prepared,
                    const GibsConfig& config, uint64_t seed);

// #U for the ETF universe whose window ends at `date` (inclusive).
int gibs_dimension(const data::ReturnsPanel& panel, const Date& date,
                   const GibsConfig& config, int window_weeks = 156,
                   const data::UniverseFilters& filters = {});

// Principal components needed to reach `variance_target` of the window's
// ETF return covariance spectrum.
int pca_dimension(const data::ReturnsPanel& panel, const Date& date,
                  double variance_target = 0.90, int window_weeks = 156,
                  const data::UniverseFilters& filters = {});

// ---- rolling engine ----

struct ModelReport {
  std::vector<std::string> selected;
  std::vector<std::string> significant;
  double alpha = 0.0;
  double alpha_p = 1.0;
  std::vector<std::pair<std::string, double>> betas;
  double adj_r2 = 0.0;
  double prediction = 0.0;  // one week ahead, window-frozen coefficients
  double residual = 0.0;    // realized - prediction
  bool intercept_only = false;
};

struct SideRow {
  double realized_excess = 0.0;
  std::vector<std::string> members;
  ModelReport amf;
  ModelReport ff5;
  double amf_vs_ff5_anova_p = 0.0;  // in-sample nested F on the window
};

struct LedgerRow {
  Date week;
  Date window_start;
  Date window_end;
  SideRow low;
  SideRow high;
  int etf_count = 0;
  int gibs_dim = 0;
  int pca_dim = 0;
  std::vector<std::string> union_prototype_ids;
  bool failed = false;
  std::string failure;
};

struct AssetInfoLite {
  data::AssetKind kind = data::AssetKind::Stock;
  std::string subclass;
  std::string merged_class;
};

struct WindowLedger {
  std::vector<LedgerRow> rows;
  std::map<std::string, AssetInfoLite> asset_info;
};

struct RollSettings {
  int window_weeks = 156;
  int vol_lookback_weeks = 52;
  double quartile_fraction = 0.25;
  int universe_top_n = 2500;
  double pca_variance_target = 0.90;
  GibsConfig gibs;
  int jobs = 1;
};

// One row per evaluation week in [eval_first, eval_last] (calendar indices).
// Each window is the `window_weeks` weeks ending the week before; failures
// are recorded on the row and the run continues.
WindowLedger run_rolling(const data::ReturnsPanel& panel, const data::EtfTaxonomy& taxonomy,
                         int eval_first, int eval_last, const RollSettings& settings);

void write_ledger_jsonl(const WindowLedger& ledger, const std::string& path);

// Assembles the candidate basis (FF5 + given ETF ids) over a window.
BasisPanel build_basis_panel(const data::ReturnsPanel& panel,
                             const std::vector<std::string>& etf_ids, int first_week,
                             int last_week);

}  // namespace amf::gibs
