#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

// End-to-end checks of the gibs_amf executable (path injected by CMake).

namespace {

namespace fs = std::filesystem;

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& tag) {
    dir = fs::temp_directory_path() / ("gibsamf_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string sub(const std::string& name) const { return (dir / name).string(); }
};

int run_cli(const std::string& args) {
  std::string cmd = std::string(CLI_BINARY_PATH) + " " + args + " 2>/dev/null";
  int rc = std::system(cmd.c_str());
  return rc < 0 ? rc : WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("cli: synth -> run -> dims round trip with determinism") {
  Scratch tmp("roundtrip");
  REQUIRE(run_cli("synth --out " + tmp.sub("mkt") +
                  " --seed 5 --weeks 170 --jobs 1") == 0);
  for (const char* f : {"returns.csv", "meta.csv", "factors.csv", "ground_truth.json"}) {
    CHECK(fs::exists(tmp.sub("mkt") + "/" + std::string(f)));
  }

  write_file(tmp.sub("cfg.json"),
             std::string("{\n") + "  \"returns_csv\": \"" + tmp.sub("mkt") +
                 "/returns.csv\",\n  \"meta_csv\": \"" + tmp.sub("mkt") +
                 "/meta.csv\",\n  \"factors_csv\": \"" + tmp.sub("mkt") +
                 "/factors.csv\",\n  \"seed\": 5,\n  \"jobs\": 2\n}\n");

  REQUIRE(run_cli("run --config " + tmp.sub("cfg.json") + " --out " + tmp.sub("out1")) == 0);
  REQUIRE(run_cli("run --config " + tmp.sub("cfg.json") + " --out " + tmp.sub("out2")) == 0);
  // identical config -> byte-identical ledger
  CHECK(slurp(tmp.sub("out1") + "/ledger.jsonl") == slurp(tmp.sub("out2") + "/ledger.jsonl"));
  CHECK(fs::exists(tmp.sub("out1") + "/report/gof.csv"));

  REQUIRE(run_cli("dims --config " + tmp.sub("cfg.json") + " --out " + tmp.sub("dims")) == 0);
  std::string dims = slurp(tmp.sub("dims") + "/dimensions.csv");
  REQUIRE(dims.rfind("date,etf_count,gibs_dim,pca_dim", 0) == 0);
  {
    // every row keeps gibs_dim within the universe size
    std::istringstream lines(dims);
    std::string line;
    std::getline(lines, line);  // header
    int rows = 0;
    while (std::getline(lines, line)) {
      int etf_count = 0, gibs_dim = 0, pca_dim = 0;
      char date[16];
      REQUIRE(std::sscanf(line.c_str(), "%15[^,],%d,%d,%d", date, &etf_count, &gibs_dim,
                          &pca_dim) == 4);
      CHECK(gibs_dim <= etf_count);
      CHECK(gibs_dim >= 1);
      CHECK(pca_dim >= 1);
      ++rows;
    }
    CHECK(rows >= 10);
  }

  SUBCASE("--portfolios-only stops after the portfolio files") {
    REQUIRE(run_cli("run --config " + tmp.sub("cfg.json") + " --out " + tmp.sub("ponly") +
                    " --portfolios-only") == 0);
    CHECK(fs::exists(tmp.sub("ponly") + "/portfolio_returns.csv"));
    CHECK(fs::exists(tmp.sub("ponly") + "/portfolios.csv"));
    CHECK_FALSE(fs::exists(tmp.sub("ponly") + "/ledger.jsonl"));
  }

  SUBCASE("the shipped taxonomy fixture loads through --taxonomy") {
    REQUIRE(run_cli("run --config " + tmp.sub("cfg.json") + " --out " + tmp.sub("tax") +
                    " --taxonomy " + TAXONOMY_FIXTURE_PATH) == 0);
    CHECK(fs::exists(tmp.sub("tax") + "/report/heatmap_low.csv"));
    // bogus taxonomy path fails cleanly
    CHECK(run_cli("run --config " + tmp.sub("cfg.json") + " --out " + tmp.sub("tax2") +
                  " --taxonomy " + tmp.sub("nope.csv")) == 2);
  }
}

TEST_CASE("cli: bad inputs exit 2") {
  Scratch tmp("badinput");
  // synth spec too short for the default window
  CHECK(run_cli("synth --out " + tmp.sub("x") + " --weeks 60") == 2);
  // unwritable output directory is an I/O error
  CHECK(run_cli("synth --out /proc/gibsamf-nope --weeks 170") == 2);
  // missing required data files
  CHECK(run_cli("run --out " + tmp.sub("y")) == 2);
  // nonexistent config file
  CHECK(run_cli("run --config " + tmp.sub("nope.json")) == 2);
  // unknown flag (CLI11 parse error)
  CHECK(run_cli("run --definitely-not-a-flag") == 2);
  // unknown subcommand
  CHECK(run_cli("frobnicate") == 2);
}

TEST_CASE("cli: --version prints and exits cleanly") {
  CHECK(run_cli("--version >/dev/null") == 0);
}
