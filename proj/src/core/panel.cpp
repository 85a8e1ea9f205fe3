#include "core/panel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "core/common.hpp"
#include "core/csv.hpp"
#include "core/log.hpp"

namespace amf::data {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

int Calendar::index_of(const Date& d) const {
  auto it = std::lower_bound(dates.begin(), dates.end(), d);
  if (it == dates.end() || !(*it == d)) return -1;
  return static_cast<int>(it - dates.begin());
}

const char* asset_kind_name(AssetKind k) {
  switch (k) {
    case AssetKind::Stock: return "Stock";
    case AssetKind::Etf: return "Etf";
    case AssetKind::FF5Factor: return "FF5Factor";
    case AssetKind::RiskFree: return "RiskFree";
  }
  return "?";
}

AssetKind parse_asset_kind(const std::string& name) {
  if (name == "Stock") return AssetKind::Stock;
  if (name == "Etf") return AssetKind::Etf;
  if (name == "FF5Factor") return AssetKind::FF5Factor;
  if (name == "RiskFree") return AssetKind::RiskFree;
  raise(ErrorKind::Parse, "unknown asset kind: '" + name + "'");
}

ReturnsPanel::ReturnsPanel(Calendar calendar, std::vector<AssetMeta> assets)
    : calendar_(std::move(calendar)), assets_(std::move(assets)) {
  for (size_t i = 1; i < calendar_.dates.size(); ++i) {
    if (!(calendar_.dates[i - 1] < calendar_.dates[i])) {
      raise(ErrorKind::Data, "calendar dates must be strictly increasing at index " +
                                 std::to_string(i));
    }
  }
  for (size_t i = 0; i < assets_.size(); ++i) {
    const AssetMeta& m = assets_[i];
    bool is_etf = m.kind == AssetKind::Etf;
    if (is_etf != m.etf_class.has_value() || is_etf != m.etf_subclass.has_value()) {
      raise(ErrorKind::Data,
            "asset " + m.asset_id + ": etf_class/etf_subclass present iff kind=Etf");
    }
    auto [it, inserted] = index_.emplace(m.asset_id, static_cast<int>(i));
    if (!inserted) raise(ErrorKind::Data, "duplicate asset id: " + m.asset_id);
    if (m.kind == AssetKind::RiskFree) rf_col_ = static_cast<int>(i);
  }
  returns_ = Eigen::MatrixXd::Constant(calendar_.size(), n_assets(), kNaN);
}

int ReturnsPanel::column_of(const std::string& asset_id) const {
  auto it = index_.find(asset_id);
  return it == index_.end() ? -1 : it->second;
}

void ReturnsPanel::set_market_cap(Eigen::MatrixXd caps) {
  if (caps.rows() != returns_.rows() || caps.cols() != returns_.cols()) {
    raise(ErrorKind::Data, "market cap matrix dimensions do not match panel");
  }
  market_cap_ = std::move(caps);
}

void ReturnsPanel::set_delist_return(const std::string& asset_id, double value) {
  if (column_of(asset_id) < 0) raise(ErrorKind::Data, "delist return for unknown asset " + asset_id);
  delist_returns_[asset_id] = value;
}

std::optional<double> ReturnsPanel::delist_return(const std::string& asset_id) const {
  auto it = delist_returns_.find(asset_id);
  if (it == delist_returns_.end()) return std::nullopt;
  return it->second;
}

double ReturnsPanel::risk_free(int week) const {
  if (rf_col_ < 0) raise(ErrorKind::Data, "panel has no risk-free column");
  double v = returns_(week, rf_col_);
  if (std::isnan(v)) {
    raise(ErrorKind::Data,
          "missing risk-free entry at " + calendar_.at(week).to_string());
  }
  return v;
}

Eigen::MatrixXd ReturnsPanel::excess_returns(const std::vector<int>& cols, int first_week,
                                             int last_week) const {
  if (first_week < 0 || last_week >= n_weeks() || first_week > last_week) {
    raise(ErrorKind::InvalidArgument, "excess_returns: bad week range");
  }
  int t = last_week - first_week + 1;
  Eigen::MatrixXd out(t, static_cast<int>(cols.size()));
  for (int w = 0; w < t; ++w) {
    double r0 = risk_free(first_week + w);
    for (size_t j = 0; j < cols.size(); ++j) {
      double r = returns_(first_week + w, cols[j]);
      out(w, static_cast<int>(j)) = std::isnan(r) ? kNaN : r - r0;
    }
  }
  return out;
}

Eigen::MatrixXd ReturnsPanel::excess_returns(const std::vector<std::string>& ids,
                                             int first_week, int last_week) const {
  std::vector<int> cols;
  cols.reserve(ids.size());
  for (const auto& id : ids) {
    int c = column_of(id);
    if (c < 0) raise(ErrorKind::Data, "unknown asset id: " + id);
    cols.push_back(c);
  }
  return excess_returns(cols, first_week, last_week);
}

int ReturnsPanel::observed_count(int col, int first_week, int last_week) const {
  int count = 0;
  for (int w = first_week; w <= last_week; ++w) {
    if (observed(w, col)) ++count;
  }
  return count;
}

bool ReturnsPanel::fully_observed(int col, int first_week, int last_week) const {
  return observed_count(col, first_week, last_week) == last_week - first_week + 1;
}

std::vector<int> ReturnsPanel::columns_of_kind(AssetKind kind) const {
  std::vector<int> out;
  for (int c = 0; c < n_assets(); ++c) {
    if (assets_[static_cast<size_t>(c)].kind == kind) out.push_back(c);
  }
  return out;
}

ReturnsPanel load_panel(const std::string& returns_csv_path,
                        const std::string& meta_csv_path) {
  // Pass 1: metadata.
  std::vector<AssetMeta> assets;
  {
    csv::Reader reader(meta_csv_path,
                       {"asset_id", "kind", "share_code", "exchange_code", "etf_class",
                        "etf_subclass"});
    csv::Row row;
    while (reader.next(&row)) {
      if (row.fields.size() != 6) {
        raise(ErrorKind::Parse, meta_csv_path + ":" + std::to_string(row.line_number) +
                                    ": expected 6 fields, got " +
                                    std::to_string(row.fields.size()));
      }
      AssetMeta m;
      m.asset_id = row.fields[0];
      if (m.asset_id.empty()) {
        raise(ErrorKind::Parse,
              meta_csv_path + ":" + std::to_string(row.line_number) + ": empty asset_id");
      }
      m.kind = parse_asset_kind(row.fields[1]);
      m.share_code = static_cast<int>(csv::parse_long(row.fields[2], reader, row.line_number));
      m.exchange_code =
          static_cast<int>(csv::parse_long(row.fields[3], reader, row.line_number));
      if (!row.fields[4].empty()) m.etf_class = row.fields[4];
      if (!row.fields[5].empty()) m.etf_subclass = row.fields[5];
      if (m.kind == AssetKind::Etf) {
        if (!m.etf_class || !m.etf_subclass) {
          raise(ErrorKind::Data, meta_csv_path + ":" + std::to_string(row.line_number) +
                                     ": ETF " + m.asset_id + " lacks class/subclass");
        }
        const auto& tax = EtfTaxonomy::builtin();
        if (!tax.has_subclass(*m.etf_subclass)) {
          raise(ErrorKind::Data, meta_csv_path + ":" + std::to_string(row.line_number) +
                                     ": unknown ETF subclass '" + *m.etf_subclass + "'");
        }
        if (!tax.class_contains(*m.etf_class, *m.etf_subclass)) {
          raise(ErrorKind::Data, meta_csv_path + ":" + std::to_string(row.line_number) +
                                     ": subclass '" + *m.etf_subclass +
                                     "' does not belong to class '" + *m.etf_class + "'");
        }
      }
      assets.push_back(std::move(m));
    }
  }

  // Pass 2: scan returns for the calendar, then fill.
  struct Cell {
    long line;
    Date date;
    std::string asset_id;
    bool has_ret = false;
    double ret = 0.0;
    bool has_delist = false;
    double delist = 0.0;
  };
  std::vector<Cell> cells;
  std::set<Date> date_set;
  {
    csv::Reader reader(returns_csv_path, {"date", "asset_id", "ret"});
    csv::Row row;
    while (reader.next(&row)) {
      if (row.fields.size() != 3 && row.fields.size() != 4) {
        raise(ErrorKind::Parse, returns_csv_path + ":" + std::to_string(row.line_number) +
                                    ": expected 3 or 4 fields, got " +
                                    std::to_string(row.fields.size()));
      }
      Cell c;
      c.line = row.line_number;
      try {
        c.date = parse_date(row.fields[0]);
      } catch (const Error& e) {
        raise(ErrorKind::Parse, returns_csv_path + ":" + std::to_string(row.line_number) +
                                    ": " + e.what());
      }
      c.asset_id = row.fields[1];
      if (!row.fields[2].empty()) {
        c.has_ret = true;
        c.ret = csv::parse_double(row.fields[2], reader, row.line_number);
      }
      if (row.fields.size() == 4 && !row.fields[3].empty()) {
        c.has_delist = true;
        c.delist = csv::parse_double(row.fields[3], reader, row.line_number);
      }
      if (!c.has_ret && !c.has_delist) {
        raise(ErrorKind::Parse, returns_csv_path + ":" + std::to_string(row.line_number) +
                                    ": row carries neither ret nor delist_ret");
      }
      if (c.has_ret && c.has_delist) {
        raise(ErrorKind::Parse, returns_csv_path + ":" + std::to_string(row.line_number) +
                                    ": row carries both ret and delist_ret");
      }
      date_set.insert(c.date);
      cells.push_back(std::move(c));
    }
  }

  Calendar cal;
  cal.dates.assign(date_set.begin(), date_set.end());
  ReturnsPanel panel(std::move(cal), std::move(assets));

  std::unordered_map<std::string, int> delist_week;
  for (const Cell& c : cells) {
    int col = panel.column_of(c.asset_id);
    if (col < 0) {
      raise(ErrorKind::Data, returns_csv_path + ":" + std::to_string(c.line) + ": asset '" +
                                 c.asset_id + "' not present in " + meta_csv_path);
    }
    int week = panel.calendar().index_of(c.date);
    if (panel.observed(week, col)) {
      raise(ErrorKind::Data, returns_csv_path + ":" + std::to_string(c.line) +
                                 ": duplicate (date, asset) cell for " + c.asset_id + " at " +
                                 c.date.to_string());
    }
    panel.set_ret(week, col, c.has_ret ? c.ret : c.delist);
    if (c.has_delist) {
      if (!delist_week.emplace(c.asset_id, week).second) {
        raise(ErrorKind::Data, returns_csv_path + ":" + std::to_string(c.line) +
                                   ": multiple delisting returns for " + c.asset_id);
      }
      panel.set_delist_return(c.asset_id, c.delist);
    }
  }

  // The delisting return is the asset's terminal observation.
  for (const auto& [id, week] : delist_week) {
    int col = panel.column_of(id);
    for (int w = week + 1; w < panel.n_weeks(); ++w) {
      if (panel.observed(w, col)) {
        raise(ErrorKind::Data, "asset " + id + ": observation at " +
                                   panel.calendar().at(w).to_string() +
                                   " after its delisting return");
      }
    }
  }
  return panel;
}

void merge_factors(ReturnsPanel& panel, const std::string& factors_csv_path) {
  csv::Reader reader(factors_csv_path, {"date", "mkt_rf", "smb", "hml", "rmw", "cma", "rf"});
  std::map<Date, std::array<double, 6>> rows;
  csv::Row row;
  while (reader.next(&row)) {
    if (row.fields.size() != 7) {
      raise(ErrorKind::Parse, factors_csv_path + ":" + std::to_string(row.line_number) +
                                  ": expected 7 fields");
    }
    Date d = parse_date(row.fields[0]);
    std::array<double, 6> vals{};
    for (int i = 0; i < 6; ++i) {
      vals[static_cast<size_t>(i)] =
          csv::parse_double(row.fields[static_cast<size_t>(i + 1)], reader, row.line_number);
    }
    if (!rows.emplace(d, vals).second) {
      raise(ErrorKind::Data, factors_csv_path + ":" + std::to_string(row.line_number) +
                                 ": duplicate date " + d.to_string());
    }
  }

  // Rebuild the panel with the six factor columns attached.
  std::vector<AssetMeta> assets = panel.assets();
  for (const auto& id : ff5_ids()) {
    if (panel.column_of(id) >= 0) raise(ErrorKind::Data, "asset id collision: " + id);
    assets.push_back({id, AssetKind::FF5Factor, 0, 0, std::nullopt, std::nullopt});
  }
  if (panel.column_of(kRiskFreeId) >= 0) {
    raise(ErrorKind::Data, std::string("asset id collision: ") + kRiskFreeId);
  }
  assets.push_back({kRiskFreeId, AssetKind::RiskFree, 0, 0, std::nullopt, std::nullopt});

  ReturnsPanel merged(panel.calendar(), std::move(assets));
  for (int w = 0; w < panel.n_weeks(); ++w) {
    for (int c = 0; c < panel.n_assets(); ++c) {
      merged.set_ret(w, c, panel.ret(w, c));
    }
    const Date& d = panel.calendar().at(w);
    auto it = rows.find(d);
    if (it == rows.end()) {
      raise(ErrorKind::Data,
            factors_csv_path + ": no factor row for panel date " + d.to_string());
    }
    const auto& vals = it->second;
    double rf = vals[5];
    // Factors are stored as excess + rf so excess_returns() recovers them.
    for (int i = 0; i < 5; ++i) {
      merged.set_ret(w, panel.n_assets() + i, vals[static_cast<size_t>(i)] + rf);
    }
    merged.set_ret(w, panel.n_assets() + 5, rf);
  }
  if (panel.has_market_cap()) {
    Eigen::MatrixXd caps =
        Eigen::MatrixXd::Constant(merged.n_weeks(), merged.n_assets(), kNaN);
    caps.leftCols(panel.n_assets()) = panel.market_cap();
    merged.set_market_cap(std::move(caps));
  }
  for (const auto& m : panel.assets()) {
    auto dl = panel.delist_return(m.asset_id);
    if (dl) merged.set_delist_return(m.asset_id, *dl);
  }
  panel = std::move(merged);
}

UniverseSnapshot build_universe(const ReturnsPanel& panel, const Date& date,
                                const UniverseFilters& filters) {
  int idx = panel.calendar().index_of(date);
  if (idx < 0) {
    raise(ErrorKind::InvalidArgument, "universe date " + date.to_string() + " not in calendar");
  }
  if (idx + 1 < filters.etf_window_weeks) {
    raise(ErrorKind::InvalidArgument,
          "universe date " + date.to_string() + " has fewer than " +
              std::to_string(filters.etf_window_weeks) + " weeks of history");
  }
  int stock_first = idx - filters.vol_lookback_weeks + 1;
  int etf_first = idx - filters.etf_window_weeks + 1;

  UniverseSnapshot snap;
  snap.date = date;

  // Stocks: SHRCD 10/11, EXCHCD 1-3, 80% observability over trailing year.
  struct Candidate {
    std::string id;
    double cap;
  };
  std::vector<Candidate> candidates;
  int min_obs = static_cast<int>(
      std::ceil(filters.min_observed_fraction * filters.vol_lookback_weeks - 1e-9));
  for (int c = 0; c < panel.n_assets(); ++c) {
    const AssetMeta& m = panel.meta(c);
    if (m.kind != AssetKind::Stock) continue;
    if (m.share_code != 10 && m.share_code != 11) continue;
    if (m.exchange_code < 1 || m.exchange_code > 3) continue;
    if (panel.observed_count(c, stock_first, idx) < min_obs) continue;
    double cap = kNaN;
    if (panel.has_market_cap()) cap = panel.market_cap()(idx, c);
    candidates.push_back({m.asset_id, cap});
  }
  if (panel.has_market_cap()) {
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      bool an = std::isnan(a.cap), bn = std::isnan(b.cap);
      if (an != bn) return bn;  // observed caps first
      if (!an && a.cap != b.cap) return a.cap > b.cap;
      return a.id < b.id;
    });
    if (static_cast<int>(candidates.size()) > filters.top_n_by_cap) {
      candidates.resize(static_cast<size_t>(filters.top_n_by_cap));
    }
  } else {
    static bool warned = false;
    if (!warned) {
      log::warn("panel has no market caps; skipping the top-" +
                std::to_string(filters.top_n_by_cap) + " capitalization filter");
      warned = true;
    }
  }
  for (const auto& c : candidates) snap.eligible_stocks.insert(c.id);

  // ETFs: SHRCD 73, EXCHCD 1-3, fully observed over the trailing window.
  for (int c = 0; c < panel.n_assets(); ++c) {
    const AssetMeta& m = panel.meta(c);
    if (m.kind != AssetKind::Etf) continue;
    if (m.share_code != 73) continue;
    if (m.exchange_code < 1 || m.exchange_code > 3) continue;
    if (!panel.fully_observed(c, etf_first, idx)) continue;
    snap.eligible_etfs.insert(m.asset_id);
  }
  return snap;
}

}  // namespace amf::data
