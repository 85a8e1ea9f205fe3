#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/dates.hpp"
#include "core/taxonomy.hpp"

namespace amf::data {

struct Calendar {
  std::vector<Date> dates;  // strictly increasing

  int size() const { return static_cast<int>(dates.size()); }
  // Index of the date; -1 when absent.
  int index_of(const Date& d) const;
  const Date& at(int i) const { return dates[static_cast<size_t>(i)]; }
};

enum class AssetKind { Stock, Etf, FF5Factor, RiskFree };

const char* asset_kind_name(AssetKind k);
AssetKind parse_asset_kind(const std::string& name);

struct AssetMeta {
  std::string asset_id;
  AssetKind kind = AssetKind::Stock;
  int share_code = 0;
  int exchange_code = 0;
  std::optional<std::string> etf_class;
  std::optional<std::string> etf_subclass;
};

// Well-known ids for the factor columns merged from factors.csv.
inline constexpr const char* kMarketId = "MKT_RF";
inline const std::vector<std::string>& ff5_ids();
inline constexpr const char* kRiskFreeId = "RF";

// Date-indexed matrix of weekly simple returns; NaN marks a missing cell.
// FF5 factor columns store excess + risk-free so that excess_returns()
// uniformly recovers the published excess factor.
class ReturnsPanel {
 public:
  ReturnsPanel(Calendar calendar, std::vector<AssetMeta> assets);

  const Calendar& calendar() const { return calendar_; }
  const std::vector<AssetMeta>& assets() const { return assets_; }
  int n_weeks() const { return calendar_.size(); }
  int n_assets() const { return static_cast<int>(assets_.size()); }

  int column_of(const std::string& asset_id) const;  // -1 when absent
  const AssetMeta& meta(int col) const { return assets_[static_cast<size_t>(col)]; }

  double ret(int week, int col) const { return returns_(week, col); }
  void set_ret(int week, int col, double value) { returns_(week, col) = value; }
  bool observed(int week, int col) const { return !std::isnan(returns_(week, col)); }
  const Eigen::MatrixXd& returns() const { return returns_; }

  bool has_market_cap() const { return market_cap_.has_value(); }
  const Eigen::MatrixXd& market_cap() const { return *market_cap_; }
  void set_market_cap(Eigen::MatrixXd caps);

  void set_delist_return(const std::string& asset_id, double value);
  std::optional<double> delist_return(const std::string& asset_id) const;

  int risk_free_col() const { return rf_col_; }
  // Risk-free level at a week; Data error when absent or missing.
  double risk_free(int week) const;

  // Y = R - r0 for the given columns over [first_week, last_week]; missing
  // cells stay NaN. Data error on a missing risk-free entry.
  Eigen::MatrixXd excess_returns(const std::vector<int>& cols, int first_week,
                                 int last_week) const;
  Eigen::MatrixXd excess_returns(const std::vector<std::string>& ids, int first_week,
                                 int last_week) const;

  int observed_count(int col, int first_week, int last_week) const;
  bool fully_observed(int col, int first_week, int last_week) const;

  std::vector<int> columns_of_kind(AssetKind kind) const;

 private:
  Calendar calendar_;
  std::vector<AssetMeta> assets_;
  Eigen::MatrixXd returns_;
  std::optional<Eigen::MatrixXd> market_cap_;
  std::unordered_map<std::string, int> index_;
  std::map<std::string, double> delist_returns_;
  int rf_col_ = -1;
};

struct UniverseSnapshot {
  Date date;
  std::set<std::string> eligible_stocks;
  std::set<std::string> eligible_etfs;
};

struct UniverseFilters {
  int vol_lookback_weeks = 52;       // "previous year"
  int etf_window_weeks = 156;        // "3-year regression window"
  int top_n_by_cap = 2500;
  double min_observed_fraction = 0.8;
};

// Long-format ingestion: header date,asset_id,ret[,delist_ret]; a missing
// cell is simply an absent row. A delist_ret row supplies the asset's final
// return (survivorship-bias handling).
ReturnsPanel load_panel(const std::string& returns_csv_path, const std::string& meta_csv_path);

// Adds MKT_RF,SMB,HML,RMW,CMA,RF columns from factors.csv
// (date,mkt_rf,smb,hml,rmw,cma,rf; factors are excess, rf is the level).
// Every panel calendar date must be covered.
void merge_factors(ReturnsPanel& panel, const std::string& factors_csv_path);

// Universe filters at `date`: stocks SHRCD 10/11, EXCHCD 1-3, top-N market
// cap, >=80% observed over the trailing year; ETFs SHRCD 73, EXCHCD 1-3,
// fully observed over the trailing 3-year window. Windows end at `date`
// inclusive.
UniverseSnapshot build_universe(const ReturnsPanel& panel, const Date& date,
                                const UniverseFilters& filters = {});

inline const std::vector<std::string>& ff5_ids() {
  static const std::vector<std::string> ids = {"MKT_RF", "SMB", "HML", "RMW", "CMA"};
  return ids;
}

}  // namespace amf::data
