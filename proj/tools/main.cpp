// gibs_amf — command-line front end for the gibsamf shared library.
//
//   gibs_amf synth --out DIR [--seed N] ...
//   gibs_amf run   --config cfg.json [--out DIR] [--jobs N] ...
//   gibs_amf dims  --config cfg.json [--out DIR] ...
//
// Flags override config-file values. Exit codes: 0 success, 2 bad input or
// configuration, 1 internal failure.

#include <CLI11.hpp>

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "gibsamf.h"

namespace {

struct ConfigDeleter {
  void operator()(amf_config* c) const { amf_config_destroy(c); }
};
using ConfigPtr = std::unique_ptr<amf_config, ConfigDeleter>;

int exit_code_for(amf_status status) {
  switch (status) {
    case AMF_OK: return 0;
    case AMF_ERR_INVALID_ARGUMENT:
    case AMF_ERR_PARSE:
    case AMF_ERR_DATA:
    case AMF_ERR_IO: return 2;
    default: return 1;
  }
}

struct CommonFlags {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;

  void attach(CLI::App* cmd, bool with_pipeline_flags) {
    cmd->add_option("--config", config_path, "JSON configuration file");
    auto opt = [this, cmd](const char* flag, const char* key, const char* help) {
      cmd->add_option_function<std::string>(
          flag, [this, key](const std::string& v) { overrides.emplace_back(key, v); }, help);
    };
    opt("--out", "out_dir", "output directory");
    opt("--seed", "seed", "RNG seed; determines every output byte");
    opt("--jobs", "jobs", "worker threads over evaluation weeks (0 = all cores)");
    if (with_pipeline_flags) {
      opt("--eval-start", "eval_start", "first evaluation week (ISO date)");
      opt("--eval-end", "eval_end", "last evaluation week (ISO date)");
      opt("--lasso-cap", "lasso_cap", "support cap for the modified lambda rule");
      opt("--cluster-threshold", "cluster_threshold", "prototype clustering cut height");
      opt("--returns", "returns_csv", "returns CSV path");
      opt("--meta", "meta_csv", "asset metadata CSV path");
      opt("--factors", "factors_csv", "FF5 factors CSV path");
      opt("--taxonomy", "taxonomy_csv", "ETF taxonomy CSV (default: built-in)");
      cmd->add_flag_function(
          "--portfolios-only",
          [this](int64_t) { overrides.emplace_back("portfolios_only", "true"); },
          "stop after writing portfolio_returns.csv");
    }
  }

  int apply(amf_config* config) const {
    if (!config_path.empty()) {
      amf_status st = amf_config_load_file(config, config_path.c_str());
      if (st != AMF_OK) {
        std::fprintf(stderr, "gibs_amf: %s: %s\n", config_path.c_str(), amf_last_error());
        return exit_code_for(st);
      }
    }
    for (const auto& [key, value] : overrides) {
      amf_status st = amf_config_set(config, key.c_str(), value.c_str());
      if (st != AMF_OK) {
        std::fprintf(stderr, "gibs_amf: --%s: %s\n", key.c_str(), amf_last_error());
        return exit_code_for(st);
      }
    }
    return 0;
  }
};

int run_command(const CommonFlags& flags, amf_status (*command)(const amf_config*)) {
  ConfigPtr config;
  {
    amf_config* raw = nullptr;
    if (amf_config_create(&raw) != AMF_OK) {
      std::fprintf(stderr, "gibs_amf: %s\n", amf_last_error());
      return 1;
    }
    config.reset(raw);
  }
  if (int rc = flags.apply(config.get()); rc != 0) return rc;
  amf_status st = command(config.get());
  if (st != AMF_OK) {
    std::fprintf(stderr, "gibs_amf: %s error: %s\n", amf_status_name(st), amf_last_error());
  }
  return exit_code_for(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive Multi-Factor model estimation via GIBS"};
  app.set_version_flag("--version", amf_version());
  app.require_subcommand(1);

  CommonFlags synth_flags, run_flags, dims_flags;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic market");
  synth_flags.attach(synth, /*with_pipeline_flags=*/false);
  synth->add_option_function<std::string>(
      "--weeks", [&](const std::string& v) { synth_flags.overrides.emplace_back("synth.weeks", v); },
      "weeks to generate");
  synth->add_option_function<std::string>(
      "--mode", [&](const std::string& v) { synth_flags.overrides.emplace_back("synth.mode", v); },
      "generic | anomaly");

  CLI::App* run = app.add_subcommand("run", "run the full analysis pipeline");
  run_flags.attach(run, /*with_pipeline_flags=*/true);
  CLI::App* dims = app.add_subcommand("dims", "GIBS and PCA dimensions per week");
  dims_flags.attach(dims, /*with_pipeline_flags=*/true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (synth->parsed()) return run_command(synth_flags, amf_run_synth);
  if (run->parsed()) return run_command(run_flags, amf_run_pipeline);
  return run_command(dims_flags, amf_run_dims);
}
