#pragma once

#include <map>
#include <string>
#include <vector>

namespace amf::data {

// ETF classification: 10 classes, 73 subclasses, plus the merged categories
// used by the heatmap reports. Ships as a built-in table mirrored by the
// data/etf_taxonomy.csv fixture; a custom CSV may be loaded instead.
class EtfTaxonomy {
 public:
  struct Entry {
    std::string etf_class;
    std::string subclass;
    std::string merged_class;
  };

  static const EtfTaxonomy& builtin();
  static EtfTaxonomy load_csv(const std::string& path);

  // Merged heatmap category for a subclass; unknown subclass raises a Data
  // error. Subclasses outside any merge group map to themselves.
  const std::string& merged_class(const std::string& subclass) const;
  const std::string& class_of(const std::string& subclass) const;
  bool has_subclass(const std::string& subclass) const;
  bool class_contains(const std::string& etf_class, const std::string& subclass) const;

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<std::string> all_classes() const;
  std::vector<std::string> all_merged_classes() const;  // sorted, distinct

  void write_csv(const std::string& path) const;

 private:
  explicit EtfTaxonomy(std::vector<Entry> entries);

  std::vector<Entry> entries_;
  std::map<std::string, int> by_subclass_;
};

}  // namespace amf::data
