#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "gibsamf.h"

namespace {

namespace fs = std::filesystem;

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& tag) {
    dir = fs::temp_directory_path() / ("gibsamf_capi_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string sub(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Config {
  amf_config* c = nullptr;
  Config() { REQUIRE(amf_config_create(&c) == AMF_OK); }
  ~Config() { amf_config_destroy(c); }
  void set(const char* key, const std::string& value) {
    REQUIRE(amf_config_set(c, key, value.c_str()) == AMF_OK);
  }
};

}  // namespace

TEST_CASE("version and status names are stable strings") {
  CHECK(std::string(amf_version()) == "0.1.0");
  CHECK(std::string(amf_status_name(AMF_OK)) == "ok");
  CHECK(std::string(amf_status_name(AMF_ERR_PARSE)) == "parse");
  CHECK(std::string(amf_status_name(AMF_ERR_IO)) == "io");
}

TEST_CASE("config set/get round-trips and rejects unknown keys") {
  Config cfg;
  cfg.set("seed", "123");
  cfg.set("out_dir", "/tmp/somewhere");
  cfg.set("synth.weeks", "220");
  cfg.set("portfolios_only", "true");

  char buf[256];
  REQUIRE(amf_config_get(cfg.c, "seed", buf, sizeof(buf)) == AMF_OK);
  CHECK(std::string(buf) == "123");
  REQUIRE(amf_config_get(cfg.c, "out_dir", buf, sizeof(buf)) == AMF_OK);
  CHECK(std::string(buf) == "/tmp/somewhere");
  REQUIRE(amf_config_get(cfg.c, "synth.weeks", buf, sizeof(buf)) == AMF_OK);
  CHECK(std::string(buf) == "220");
  REQUIRE(amf_config_get(cfg.c, "portfolios_only", buf, sizeof(buf)) == AMF_OK);
  CHECK(std::string(buf) == "true");

  CHECK(amf_config_set(cfg.c, "no_such_key", "1") == AMF_ERR_INVALID_ARGUMENT);
  CHECK(std::string(amf_last_error()).find("no_such_key") != std::string::npos);
  CHECK(amf_config_set(cfg.c, "seed", "notanumber") == AMF_ERR_INVALID_ARGUMENT);

  char tiny[2];
  CHECK(amf_config_get(cfg.c, "seed", tiny, sizeof(tiny)) == AMF_ERR_INVALID_ARGUMENT);
}

TEST_CASE("config_load_string merges JSON and flags win afterwards") {
  Config cfg;
  REQUIRE(amf_config_load_string(cfg.c, R"({"seed": 9, "window_weeks": 120})") == AMF_OK);
  char buf[64];
  REQUIRE(amf_config_get(cfg.c, "window_weeks", buf, sizeof(buf)) == AMF_OK);
  CHECK(std::string(buf) == "120");
  cfg.set("seed", "10");
  REQUIRE(amf_config_get(cfg.c, "seed", buf, sizeof(buf)) == AMF_OK);
  CHECK(std::string(buf) == "10");

  CHECK(amf_config_load_string(cfg.c, "{nope") == AMF_ERR_PARSE);
  CHECK(amf_config_load_file(cfg.c, "/does/not/exist.json") == AMF_ERR_IO);
  CHECK(std::string(amf_last_error()).find("exist.json") != std::string::npos);
}

TEST_CASE("amf_run_synth writes the four market files deterministically") {
  Scratch tmp("synth");
  auto run_into = [&](const std::string& out) {
    Config cfg;
    cfg.set("out_dir", out);
    cfg.set("seed", "21");
    cfg.set("synth.weeks", "170");
    cfg.set("synth.n_stocks", "12");
    cfg.set("synth.n_etfs", "8");
    cfg.set("synth.k_factors", "3");
    REQUIRE(amf_run_synth(cfg.c) == AMF_OK);
  };
  run_into(tmp.sub("a"));
  run_into(tmp.sub("b"));
  for (const char* f : {"returns.csv", "meta.csv", "factors.csv", "ground_truth.json"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(tmp.sub("a") + "/" + std::string(f)));
    CHECK(slurp(tmp.sub("a") + "/" + f) == slurp(tmp.sub("b") + "/" + f));
  }

  SUBCASE("a synthetic market too short for the window is rejected") {
    Config cfg;
    cfg.set("out_dir", tmp.sub("short"));
    cfg.set("synth.weeks", "100");  // < window_weeks + 1
    CHECK(amf_run_synth(cfg.c) == AMF_ERR_INVALID_ARGUMENT);
  }
}

TEST_CASE("amf_run_pipeline and amf_run_dims run end to end via the C surface") {
  Scratch tmp("pipeline");
  {
    Config cfg;
    cfg.set("out_dir", tmp.sub("market"));
    cfg.set("seed", "33");
    cfg.set("synth.weeks", "175");
    cfg.set("synth.n_stocks", "24");
    cfg.set("synth.n_etfs", "10");
    cfg.set("synth.k_factors", "3");
    REQUIRE(amf_run_synth(cfg.c) == AMF_OK);
  }
  Config run;
  run.set("returns_csv", tmp.sub("market") + "/returns.csv");
  run.set("meta_csv", tmp.sub("market") + "/meta.csv");
  run.set("factors_csv", tmp.sub("market") + "/factors.csv");
  run.set("out_dir", tmp.sub("out"));
  run.set("seed", "33");
  run.set("jobs", "2");
  REQUIRE_MESSAGE(amf_run_pipeline(run.c) == AMF_OK, amf_last_error());
  CHECK(fs::exists(tmp.sub("out") + "/ledger.jsonl"));
  CHECK(fs::exists(tmp.sub("out") + "/report/residual_tests.csv"));
  CHECK(fs::exists(tmp.sub("out") + "/summary.json"));

  Config dims;
  dims.set("returns_csv", tmp.sub("market") + "/returns.csv");
  dims.set("meta_csv", tmp.sub("market") + "/meta.csv");
  dims.set("factors_csv", tmp.sub("market") + "/factors.csv");
  dims.set("out_dir", tmp.sub("dims"));
  REQUIRE_MESSAGE(amf_run_dims(dims.c) == AMF_OK, amf_last_error());
  CHECK(fs::exists(tmp.sub("dims") + "/dimensions.csv"));

  SUBCASE("missing inputs surface as a clean error status") {
    Config broken;
    broken.set("returns_csv", tmp.sub("missing.csv"));
    broken.set("meta_csv", tmp.sub("market") + "/meta.csv");
    broken.set("factors_csv", tmp.sub("market") + "/factors.csv");
    broken.set("out_dir", tmp.sub("broken"));
    CHECK(amf_run_pipeline(broken.c) == AMF_ERR_IO);
    CHECK(std::string(amf_last_error()).find("missing.csv") != std::string::npos);
  }
}

TEST_CASE("pipeline handles holes and a delisted stock end to end") {
  Scratch tmp("delist");
  {
    Config cfg;
    cfg.set("out_dir", tmp.sub("market"));
    cfg.set("seed", "55");
    cfg.set("synth.weeks", "230");
    cfg.set("synth.n_stocks", "30");
    cfg.set("synth.n_etfs", "12");
    cfg.set("synth.k_factors", "3");
    REQUIRE(amf_run_synth(cfg.c) == AMF_OK);
  }

  // Rewrite returns.csv: STK000 ends at week ~180 with a delisting return,
  // and STK001 loses a few scattered weeks (staying above the 80% floor).
  {
    std::ifstream in(tmp.sub("market") + "/returns.csv");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    in.close();
    std::ofstream out(tmp.sub("market") + "/returns.csv", std::ios::trunc);
    int stk0_rows = 0, holes = 0;
    for (const auto& l : lines) {
      bool is_stk0 = l.find(",STK000,") != std::string::npos;
      bool is_stk1 = l.find(",STK001,") != std::string::npos;
      if (is_stk0) {
        ++stk0_rows;
        if (stk0_rows == 180) {
          // replace the row with a delisting record at the same date
          std::string date = l.substr(0, l.find(','));
          out << date << ",STK000,,-0.25\n";
          continue;
        }
        if (stk0_rows > 180) continue;  // no observations after delisting
      }
      if (is_stk1 && holes < 4 && l.find("2009-") != std::string::npos) {
        ++holes;  // scattered missing cells early in the sample
        continue;
      }
      out << l << "\n";
    }
  }

  Config run;
  run.set("returns_csv", tmp.sub("market") + "/returns.csv");
  run.set("meta_csv", tmp.sub("market") + "/meta.csv");
  run.set("factors_csv", tmp.sub("market") + "/factors.csv");
  run.set("out_dir", tmp.sub("out"));
  run.set("seed", "55");
  run.set("jobs", "2");
  REQUIRE_MESSAGE(amf_run_pipeline(run.c) == AMF_OK, amf_last_error());

  // every evaluation week succeeded despite the delisting and the holes
  std::ifstream ledger(tmp.sub("out") + "/ledger.jsonl");
  std::string line;
  int rows = 0;
  while (std::getline(ledger, line)) {
    CHECK(line.find("\"error\"") == std::string::npos);
    ++rows;
  }
  CHECK(rows > 50);

  // the delisted stock eventually leaves the rankable universe: it appears
  // in early memberships (if ranked) but never in the final weeks
  std::ifstream members(tmp.sub("out") + "/portfolios.csv");
  std::string last_stk0_date, last_date;
  while (std::getline(members, line)) {
    std::string date = line.substr(0, line.find(','));
    if (line.find(",STK000") != std::string::npos) last_stk0_date = date;
    last_date = date;
  }
  if (!last_stk0_date.empty()) CHECK(last_stk0_date < last_date);
}

TEST_CASE("null arguments are rejected, not crashed on") {
  CHECK(amf_config_create(nullptr) == AMF_ERR_INVALID_ARGUMENT);
  CHECK(amf_config_set(nullptr, "seed", "1") == AMF_ERR_INVALID_ARGUMENT);
  CHECK(amf_run_pipeline(nullptr) == AMF_ERR_INVALID_ARGUMENT);
  amf_config_destroy(nullptr);  // no-op
}
