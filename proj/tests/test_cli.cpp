#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TSVOL_CLI_PATH) + " " + args +
                          " > /dev/null 2> /dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("tsvol_cli_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const char* kSmokeConfig =
    "[model]\n"
    "jumps = false\n"
    "sigma = 0.2\n"
    "[grid]\n"
    "n_steps = 100\n"
    "[run]\n"
    "paths = 2\n";

void write_config(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("mc-table smoke run, determinism, and manifest replay") {
  TempDir dir("smoke");
  const fs::path cfg = dir.path / "cfg.ini";
  write_config(cfg, kSmokeConfig);

  const fs::path d1 = dir.path / "d1";
  const fs::path d2 = dir.path / "d2";
  const fs::path d3 = dir.path / "d3";
  fs::create_directories(d1);
  fs::create_directories(d2);
  fs::create_directories(d3);

  REQUIRE(run_cli("mc-table --config " + cfg.string() + " --out " +
                  d1.string() + " --seed 7") == 0);
  const std::string csv1 = slurp(d1 / "mc_table.csv");
  CHECK(csv1.rfind("y,sigma,estimator,sample_mean", 0) == 0);
  CHECK(fs::exists(d1 / "mc_table.json"));
  CHECK(fs::exists(d1 / "mc-table_manifest.json"));

  REQUIRE(run_cli("mc-table --config " + cfg.string() + " --out " +
                  d2.string() + " --seed 7") == 0);
  CHECK(csv1 == slurp(d2 / "mc_table.csv"));

  // replay from the manifest alone
  REQUIRE(run_cli("mc-table --config " + (d1 / "mc-table_manifest.json").string() +
                  " --out " + d3.string()) == 0);
  CHECK(csv1 == slurp(d3 / "mc_table.csv"));
}

TEST_CASE("usage and configuration failures exit with code 1") {
  TempDir dir("errors");
  const fs::path cfg = dir.path / "cfg.ini";
  write_config(cfg, kSmokeConfig);
  // missing output directory
  CHECK(run_cli("mc-table --config " + cfg.string() + " --out " +
                (dir.path / "nope").string()) == 1);
  // unreadable config
  CHECK(run_cli("mc-table --config " + (dir.path / "missing.ini").string() +
                " --out " + dir.path.string()) == 1);
  // malformed config
  write_config(dir.path / "bad.ini", "[grid\n");
  CHECK(run_cli("mc-table --config " + (dir.path / "bad.ini").string() +
                " --out " + dir.path.string()) == 1);
  // no subcommand is a usage error (CLI11 default exit code is nonzero)
  CHECK(run_cli("") != 0);
}

TEST_CASE("clt-hist writes errors, histogram, and the KS statistic") {
  TempDir dir("clt");
  write_config(dir.path / "cfg.ini",
               "[model]\njumps = false\nsigma = 0.2\n"
               "[grid]\nn_steps = 512\n"
               "[run]\npaths = 50\n");
  REQUIRE(run_cli("clt-hist --config " + (dir.path / "cfg.ini").string() +
                  " --out " + dir.path.string() + " --seed 3") == 0);
  const std::string errors = slurp(dir.path / "clt_errors.csv");
  CHECK(errors.rfind("path,estimate,truth,normalized_error", 0) == 0);
  CHECK(fs::exists(dir.path / "clt_hist.csv"));
  const std::string summary = slurp(dir.path / "clt_summary.json");
  CHECK(summary.find("ks_statistic") != std::string::npos);
}

TEST_CASE("daily-iv with one block reduces to a whole-horizon estimate") {
  TempDir dir("daily");
  write_config(dir.path / "cfg.ini",
               "[model]\nsigma = 0.2\n"
               "[grid]\nn_steps = 2048\n"
               "[run]\npaths = 3\nblocks = 1\n");
  REQUIRE(run_cli("daily-iv --config " + (dir.path / "cfg.ini").string() +
                  " --out " + dir.path.string() + " --seed 5") == 0);
  const std::string csv = slurp(dir.path / "daily_iv.csv");
  CHECK(csv.rfind("path,day,truth,estimate,flags", 0) == 0);
  // 3 paths x 1 day + header
  std::size_t lines = 0;
  for (char c : csv) lines += (c == '\n');
  CHECK(lines == 4);
}

TEST_CASE("oracle-check negative control trips the band exit code") {
  TempDir dir("oracle");
  write_config(dir.path / "cfg.ini",
               "[oracle]\n"
               "h_pow_min = 10\n"
               "h_pow_max = 13\n");
  CHECK(run_cli("oracle-check --config " + (dir.path / "cfg.ini").string() +
                " --out " + dir.path.string() + " --distort-predicted 1.5") ==
        3);
  CHECK(fs::exists(dir.path / "oracle_report.json"));
}

TEST_CASE("gaussian-only oracle case flags the exponential regime") {
  TempDir dir("oracle_gauss");
  write_config(dir.path / "cfg.ini",
               "[oracle]\n"
               "c_plus = 0\n"
               "c_minus = 0\n"
               "h_pow_min = 10\n"
               "h_pow_max = 13\n");
  CHECK(run_cli("oracle-check --config " + (dir.path / "cfg.ini").string() +
                " --out " + dir.path.string()) == 0);
  const std::string rep = slurp(dir.path / "oracle_report.json");
  CHECK(rep.find("\"exponential_regime\": true") != std::string::npos);
}
