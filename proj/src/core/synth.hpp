#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/panel.hpp"

namespace amf::data {

// Synthetic weekly market with a known latent-factor structure, used for
// end-to-end verification. Factor 0 plays the market: the generated MKT_RF
// series equals factor 0's excess return.
struct SynthSpec {
  int weeks = 330;
  int n_stocks = 200;
  int n_etfs = 60;
  int k_factors = 8;
  int max_loadings = 3;       // latent factors per stock (generic mode)
  double noise_stock = 0.02;  // weekly idiosyncratic sd
  double noise_etf = 0.002;
  double rf_weekly = 0.0005;
  double alpha_stock = 0.0;  // weekly abnormal return added to every stock
  Date start_date{2008, 1, 4};

  // Per-factor weekly mean/sd; resized with defaults when shorter than k.
  std::vector<double> factor_mu;
  std::vector<double> factor_sd;
  // Per-factor ETF subclass; defaults cycle across the 10 classes.
  std::vector<std::string> factor_subclass;

  // "generic": stocks draw max_loadings random factors.
  // "anomaly": stocks split into a low-volatility group loading on
  // low_factors and a high-volatility group loading on high_factors.
  std::string mode = "generic";
  std::vector<int> low_factors;
  std::vector<int> high_factors;
  double low_noise_stock = 0.004;
  double high_noise_stock = 0.03;
};

struct GroundTruth {
  uint64_t seed = 0;
  std::string mode;
  std::vector<double> factor_mu;
  std::vector<double> factor_sd;
  std::vector<std::string> factor_subclass;
  // Basis assets proxying each latent factor (primary exposure). Factor 0
  // additionally lists MKT_RF.
  std::vector<std::vector<std::string>> factor_proxies;
  // Every basis asset with any true exposure to the factor (primary or
  // secondary loading; MKT_RF for factor 0).
  std::vector<std::vector<std::string>> factor_exposed;
  struct StockTruth {
    std::string asset_id;
    std::vector<int> factors;
    std::vector<double> loadings;
    double noise_sd = 0.0;
    std::string group;  // "", "low", "high"
  };
  std::vector<StockTruth> stocks;
  struct EtfTruth {
    std::string asset_id;
    int primary_factor = 0;
    double primary_loading = 0.0;
    std::optional<int> secondary_factor;
    double secondary_loading = 0.0;
    std::string subclass;
  };
  std::vector<EtfTruth> etfs;

  std::string to_json() const;
};

struct SyntheticMarket {
  ReturnsPanel panel;  // stocks + ETFs + factor columns already merged
  GroundTruth truth;
};

// Deterministic for a fixed (spec, seed).
SyntheticMarket generate_synthetic_market(const SynthSpec& spec, uint64_t seed);

// cmd-synth output: returns.csv, meta.csv, factors.csv, ground_truth.json.
void write_market_csvs(const SyntheticMarket& market, const std::string& out_dir);

void validate(const SynthSpec& spec);

}  // namespace amf::data
