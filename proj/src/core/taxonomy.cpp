#include "core/taxonomy.hpp"

#include <algorithm>
#include <set>

#include "core/common.hpp"
#include "core/csv.hpp"

namespace amf::data {

namespace {

struct RawEntry {
  const char* cls;
  const char* sub;
  const char* merged;  // nullptr: maps to itself
};

// 10 classes / 73 subclasses; merge groups: Bonds, Consumer Equities,
// Real Estate Related, Energy Equities, Materials & Precious Metals,
// Large Cap Equities.
const RawEntry kTable[] = {
    {"Bond/Fixed Income", "California Munis", nullptr},
    {"Bond/Fixed Income", "Corporate Bonds", "Bonds"},
    {"Bond/Fixed Income", "Emerging Markets Bonds", nullptr},
    {"Bond/Fixed Income", "Government Bonds", "Bonds"},
    {"Bond/Fixed Income", "High Yield Bonds", "Bonds"},
    {"Bond/Fixed Income", "Inflation-Protected Bonds", nullptr},
    {"Bond/Fixed Income", "International Government Bonds", nullptr},
    {"Bond/Fixed Income", "Money Market", nullptr},
    {"Bond/Fixed Income", "Mortgage Backed Securities", nullptr},
    {"Bond/Fixed Income", "National Munis", nullptr},
    {"Bond/Fixed Income", "New York Munis", nullptr},
    {"Bond/Fixed Income", "Preferred Stock/Convertible Bonds", nullptr},
    {"Bond/Fixed Income", "Total Bond Market", "Bonds"},
    {"Commodity", "Agricultural Commodities", nullptr},
    {"Commodity", "Commodities", nullptr},
    {"Commodity", "Metals", nullptr},
    {"Commodity", "Oil & Gas", nullptr},
    {"Commodity", "Precious Metals", "Materials & Precious Metals"},
    {"Currency", "Currency", nullptr},
    {"Diversified Portfolio", "Diversified Portfolio", nullptr},
    {"Diversified Portfolio", "Target Retirement Date", nullptr},
    {"Equity", "All Cap Equities", nullptr},
    {"Equity", "Alternative Energy Equities", "Energy Equities"},
    {"Equity", "Asia Pacific Equities", nullptr},
    {"Equity", "Building & Construction", "Real Estate Related"},
    {"Equity", "China Equities", nullptr},
    {"Equity", "Commodity Producers Equities", nullptr},
    {"Equity", "Communications Equities", nullptr},
    {"Equity", "Consumer Discretionary Equities", "Consumer Equities"},
    {"Equity", "Consumer Staples Equities", "Consumer Equities"},
    {"Equity", "Emerging Markets Equities", nullptr},
    {"Equity", "Energy Equities", "Energy Equities"},
    {"Equity", "Europe Equities", nullptr},
    {"Equity", "Financial Equities", nullptr},
    {"Equity", "Foreign Large Cap Equities", nullptr},
    {"Equity", "Foreign Small & Mid Cap Equities", nullptr},
    {"Equity", "Global Equities", nullptr},
    {"Equity", "Health & Biotech Equities", nullptr},
    {"Equity", "Industrials Equities", nullptr},
    {"Equity", "Japan Equities", nullptr},
    {"Equity", "Large Cap Blend Equities", "Large Cap Equities"},
    {"Equity", "Large Cap Growth Equities", "Large Cap Equities"},
    {"Equity", "Large Cap Value Equities", "Large Cap Equities"},
    {"Equity", "Latin America Equities", nullptr},
    {"Equity", "MLPs", nullptr},
    {"Equity", "Materials", "Materials & Precious Metals"},
    {"Equity", "Mid Cap Blend Equities", nullptr},
    {"Equity", "Mid Cap Growth Equities", nullptr},
    {"Equity", "Mid Cap Value Equities", nullptr},
    {"Equity", "Small Cap Blend Equities", nullptr},
    {"Equity", "Small Cap Growth Equities", nullptr},
    {"Equity", "Small Cap Value Equities", nullptr},
    {"Equity", "Technology Equities", nullptr},
    {"Equity", "Transportation Equities", nullptr},
    {"Equity", "Utilities Equities", "Real Estate Related"},
    {"Equity", "Volatility Hedged Equity", nullptr},
    {"Equity", "Water Equities", nullptr},
    {"Alternative ETFs", "Hedge Fund", nullptr},
    {"Alternative ETFs", "Long-Short", nullptr},
    {"Inverse", "Inverse Bonds", nullptr},
    {"Inverse", "Inverse Commodities", nullptr},
    {"Inverse", "Inverse Equities", nullptr},
    {"Inverse", "Inverse Volatility", nullptr},
    {"Leveraged", "Leveraged Bonds", "Bonds"},
    {"Leveraged", "Leveraged Commodities", nullptr},
    {"Leveraged", "Leveraged Currency", nullptr},
    {"Leveraged", "Leveraged Equities", nullptr},
    {"Leveraged", "Leveraged Multi-Asset", nullptr},
    {"Leveraged", "Leveraged Real Estate", "Real Estate Related"},
    {"Leveraged", "Leveraged Volatility", nullptr},
    {"Real Estate", "Global Real Estate", "Real Estate Related"},
    {"Real Estate", "Real Estate", "Real Estate Related"},
    {"Volatility", "Volatility", nullptr},
};

}  // namespace

EtfTaxonomy::EtfTaxonomy(std::vector<Entry> entries) : entries_(std::move(entries)) {
  for (size_t i = 0; i < entries_.size(); ++i) {
    auto [it, inserted] = by_subclass_.emplace(entries_[i].subclass, static_cast<int>(i));
    if (!inserted) {
      raise(ErrorKind::Data, "duplicate taxonomy subclass: " + entries_[i].subclass);
    }
  }
}

const EtfTaxonomy& EtfTaxonomy::builtin() {
  static const EtfTaxonomy instance = [] {
    std::vector<Entry> entries;
    for (const auto& raw : kTable) {
      entries.push_back({raw.cls, raw.sub, raw.merged != nullptr ? raw.merged : raw.sub});
    }
    return EtfTaxonomy(std::move(entries));
  }();
  return instance;
}

EtfTaxonomy EtfTaxonomy::load_csv(const std::string& path) {
  csv::Reader reader(path, {"class", "subclass", "merged_class"});
  std::vector<Entry> entries;
  csv::Row row;
  while (reader.next(&row)) {
    if (row.fields.size() != 3) {
      raise(ErrorKind::Parse, path + ":" + std::to_string(row.line_number) +
                                  ": expected 3 fields, got " +
                                  std::to_string(row.fields.size()));
    }
    entries.push_back({row.fields[0], row.fields[1], row.fields[2]});
  }
  if (entries.empty()) raise(ErrorKind::Data, path + ": taxonomy is empty");
  return EtfTaxonomy(std::move(entries));
}

const std::string& EtfTaxonomy::merged_class(const std::string& subclass) const {
  auto it = by_subclass_.find(subclass);
  if (it == by_subclass_.end()) {
    raise(ErrorKind::Data, "unknown ETF subclass: '" + subclass + "'");
  }
  return entries_[it->second].merged_class;
}

const std::string& EtfTaxonomy::class_of(const std::string& subclass) const {
  auto it = by_subclass_.find(subclass);
  if (it == by_subclass_.end()) {
    raise(ErrorKind::Data, "unknown ETF subclass: '" + subclass + "'");
  }
  return entries_[it->second].etf_class;
}

bool EtfTaxonomy::has_subclass(const std::string& subclass) const {
  return by_subclass_.count(subclass) > 0;
}

bool EtfTaxonomy::class_contains(const std::string& etf_class,
                                 const std::string& subclass) const {
  auto it = by_subclass_.find(subclass);
  return it != by_subclass_.end() && entries_[it->second].etf_class == etf_class;
}

std::vector<std::string> EtfTaxonomy::all_classes() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& e : entries_) {
    if (seen.insert(e.etf_class).second) out.push_back(e.etf_class);
  }
  return out;
}

std::vector<std::string> EtfTaxonomy::all_merged_classes() const {
  std::set<std::string> seen;
  for (const auto& e : entries_) seen.insert(e.merged_class);
  return {seen.begin(), seen.end()};
}

void EtfTaxonomy::write_csv(const std::string& path) const {
  csv::Writer w(path);
  w.row({"class", "subclass", "merged_class"});
  for (const auto& e : entries_) w.row({e.etf_class, e.subclass, e.merged_class});
  w.close();
}

}  // namespace amf::data
