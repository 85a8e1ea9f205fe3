#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "core/dates.hpp"
#include "core/synth.hpp"

namespace amf {

// Full run configuration: a JSON file plus string-keyed overrides (CLI flags
// and the C API funnel through set_option; overrides win).
struct RunConfig {
  std::string returns_csv;
  std::string meta_csv;
  std::string factors_csv;
  std::string taxonomy_csv;  // empty: built-in taxonomy
  std::string out_dir = "out";

  uint64_t seed = 42;
  int jobs = 0;  // 0: hardware concurrency
  std::optional<Date> eval_start;
  std::optional<Date> eval_end;

  int window_weeks = 156;
  int vol_lookback_weeks = 52;
  double quartile_fraction = 0.25;
  int universe_top_n = 2500;

  double cluster_threshold = 0.5;
  std::optional<double> cluster_threshold_union;  // defaults to cluster_threshold
  int lasso_grid_size = 100;
  double lasso_min_ratio = 1e-3;
  int cv_folds = 10;
  int lasso_cap = 20;
  double significance_level = 0.05;
  double pca_variance_target = 0.90;

  bool portfolios_only = false;
  bool welch_on_returns = false;
  bool heatmap_share_mode = false;

  data::SynthSpec synth;
};

RunConfig load_config_file(const std::string& json_path);
RunConfig parse_config_text(const std::string& json_text);

// Sets one option by key ("seed", "out_dir", "synth.weeks", ...). Values are
// parsed per the field type; unknown keys or bad values raise
// InvalidArgument.
void set_option(RunConfig& config, const std::string& key, const std::string& value);
std::string get_option(const RunConfig& config, const std::string& key);

void validate_config(const RunConfig& config);

std::string config_to_json(const RunConfig& config);

}  // namespace amf
