#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "core/panel.hpp"
#include "core/rng.hpp"

namespace test_util {

// Weekly Friday calendar starting 2010-01-08.
inline amf::data::Calendar make_calendar(int weeks) {
  amf::data::Calendar cal;
  amf::Date start{2010, 1, 8};
  for (int t = 0; t < weeks; ++t) cal.dates.push_back(start.plus_weeks(t));
  return cal;
}

inline amf::data::AssetMeta stock(const std::string& id, int share_code = 10,
                                  int exchange = 1) {
  return {id, amf::data::AssetKind::Stock, share_code, exchange, std::nullopt, std::nullopt};
}

inline amf::data::AssetMeta etf(const std::string& id, const std::string& subclass,
                                int share_code = 73, int exchange = 1) {
  return {id, amf::data::AssetKind::Etf, share_code, exchange,
          amf::data::EtfTaxonomy::builtin().class_of(subclass), subclass};
}

// Panel with a constant risk-free column appended; values filled per column
// from `returns` (rows = weeks).
inline amf::data::ReturnsPanel make_panel(int weeks, std::vector<amf::data::AssetMeta> assets,
                                          const Eigen::MatrixXd& returns,
                                          double rf = 0.0005) {
  assets.push_back(
      {amf::data::kRiskFreeId, amf::data::AssetKind::RiskFree, 0, 0, std::nullopt, std::nullopt});
  amf::data::ReturnsPanel panel(make_calendar(weeks), std::move(assets));
  for (int t = 0; t < weeks; ++t) {
    for (Eigen::Index c = 0; c < returns.cols(); ++c) {
      panel.set_ret(t, static_cast<int>(c), returns(t, c));
    }
    panel.set_ret(t, panel.n_assets() - 1, rf);
  }
  return panel;
}

// ETF panel with independent Gaussian FF5 factor columns and a constant
// risk-free column attached directly (no CSV round trip).
inline amf::data::ReturnsPanel etf_factor_panel(int weeks,
                                                std::vector<amf::data::AssetMeta> etfs,
                                                const Eigen::MatrixXd& etf_returns,
                                                uint64_t factor_seed, double rf = 0.0005) {
  using namespace amf::data;
  std::vector<AssetMeta> assets = std::move(etfs);
  size_t n_etfs = assets.size();
  for (const auto& id : ff5_ids()) {
    assets.push_back({id, AssetKind::FF5Factor, 0, 0, std::nullopt, std::nullopt});
  }
  assets.push_back({kRiskFreeId, AssetKind::RiskFree, 0, 0, std::nullopt, std::nullopt});
  ReturnsPanel panel(make_calendar(weeks), std::move(assets));
  amf::Rng rng(factor_seed);
  for (int t = 0; t < weeks; ++t) {
    for (size_t e = 0; e < n_etfs; ++e) {
      panel.set_ret(t, static_cast<int>(e), etf_returns(t, static_cast<Eigen::Index>(e)));
    }
    for (int j = 0; j < 5; ++j) {
      panel.set_ret(t, static_cast<int>(n_etfs) + j, rng.normal(0.0, 0.02) + rf);
    }
    panel.set_ret(t, static_cast<int>(n_etfs) + 5, rf);
  }
  return panel;
}

// Scratch directory wiped on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    dir_ = std::filesystem::temp_directory_path() /
           ("gibsamf_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  std::string path() const { return dir_.string(); }
  std::string file(const std::string& name) const { return (dir_ / name).string(); }

 private:
  std::filesystem::path dir_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace test_util
