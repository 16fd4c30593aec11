#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "msm/csv.hpp"

namespace fs = std::filesystem;
using namespace msm;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string scenario(const std::string& name) { return std::string(MSM_SCENARIO_DIR) + "/" + name; }

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("msm_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t column(const CsvTable& t, const std::string& name) {
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (t.header[j] == name) return j;
  }
  FAIL("missing column " << name);
  return 0;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

Run simulate(const fs::path& dir, const std::string& scen, int n, const std::string& sc, const std::string& seed,
             const std::string& output = "dataset.csv") {
  return run({"simulate", "--scenario", scenario(scen), "--n", std::to_string(n), "--semicompeting", sc, "--seed",
              seed, "--output-dir", dir.string(), "--output", output});
}

}  // namespace

TEST_CASE("simulate writes a reproducible dataset with provenance") {
  const auto dir = fresh_dir("simulate");
  auto r = simulate(dir, "s1.kv", 300, "0.40", "7");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto table = read_csv_file((dir / "dataset.csv").string());
  CHECK(table.rows.size() == 300);
  CHECK(table.header.front() == "id");
  bool tool = false, hash = false, seed = false;
  for (const auto& c : table.comments) {
    tool |= c.find("tool=msm_mediate") != std::string::npos;
    hash |= c.find("config_hash=") != std::string::npos;
    seed |= c.find("seed=7") != std::string::npos;
  }
  CHECK((tool && hash && seed));
  CHECK(fs::exists(dir / "dataset.csv.provenance"));
  const std::string first = slurp(dir / "dataset.csv");
  REQUIRE(simulate(dir, "s1.kv", 300, "0.40", "7").code == 0);
  CHECK(slurp(dir / "dataset.csv") == first);
  REQUIRE(simulate(dir, "s1.kv", 300, "0.40", "8").code == 0);
  CHECK(slurp(dir / "dataset.csv") != first);
}

TEST_CASE("usage errors") {
  const auto dir = fresh_dir("usage");
  CHECK(simulate(dir, "s1.kv", 0, "0.1", "1").code == 1);
  CHECK(run({"simulate", "--scenario", scenario("s1.kv"), "--n", "10"}).code == 1);
  CHECK(simulate(dir, "s1.kv", 10, "0.95", "1").code == 1);
  CHECK(run({"bogus"}).code == 1);
  CHECK(run({}).code == 1);
  CHECK(run({"--version"}).code == 0);
  CHECK(run({"simulate", "--scenario", (dir / "missing.kv").string(), "--n", "5", "--seed", "1"}).code == 1);
}

TEST_CASE("fit report and diagnostics") {
  const auto dir = fresh_dir("fit");
  REQUIRE(simulate(dir, "s2.kv", 1500, "0.10", "3").code == 0);
  auto r = run({"fit", "--input", (dir / "dataset.csv").string(), "--spec", scenario("s2.kv"), "--output-dir",
                dir.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto report = read_csv_file((dir / "fit_report.csv").string());
  CHECK(report.header == std::vector<std::string>{"transition", "model", "term", "coef", "se", "hr", "hr_lo", "hr_hi",
                                                  "p_value", "n_events"});
  int adjusted = 0, unadjusted = 0;
  for (const auto& row : report.rows) {
    adjusted += row[1] == "adjusted";
    unadjusted += row[1] == "unadjusted";
    if (row[0] == "01" && row[2] == "A") {
      // Generating value -1.0; a 3-SE window.
      const double coef = std::stod(row[3]), se = std::stod(row[4]);
      CHECK(std::abs(coef + 1.0) < 3 * se);
      CHECK(std::stod(row[5]) == doctest::Approx(std::exp(coef)));
    }
  }
  CHECK(adjusted == 5);
  CHECK(unadjusted == 3);
  CHECK(fs::exists(dir / "baseline.csv"));

  write_text(dir / "null.kv", "model.01 = 1\nmodel.02 = 1\nmodel.12 = 1\n");
  r = run({"fit", "--input", (dir / "dataset.csv").string(), "--spec", (dir / "null.kv").string(), "--output-dir",
           dir.string(), "--output", "null_report.csv"});
  REQUIRE(r.code == 0);
  CHECK(read_csv_file((dir / "null_report.csv").string()).rows.empty());
  CHECK_FALSE(read_csv_file((dir / "baseline.csv").string()).rows.empty());

  write_text(dir / "bad.csv",
             "id,y_t,delta_t,y_s,delta_s,a,x,c_1\n1,2,0,2,0,0,1,0.5\n2,2,0,2,0,0,1,0.5\n3,x,0,2,0,0,1,0.5\n");
  r = run({"fit", "--input", (dir / "bad.csv").string(), "--spec", scenario("s1.kv"), "--output-dir", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("line 4") != std::string::npos);
}

TEST_CASE("effects curves, bands and method agreement") {
  const auto dir = fresh_dir("effects");
  REQUIRE(simulate(dir, "s1.kv", 600, "0", "11").code == 0);
  auto r = run({"effects", "--input", (dir / "dataset.csv").string(), "--spec", scenario("s1.kv"), "--horizon", "24",
                "--step", "0.5", "--bootstrap", "20", "--seed", "5", "--methods", "all", "--output-dir",
                dir.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto ms = read_csv_file((dir / "effects_multistate.csv").string());
  const auto ex = read_csv_file((dir / "effects_exclude.csv").string());
  CHECK(ms.rows.size() == 48);
  CHECK(ms.header.size() == 10);
  const std::size_t lo = column(ms, "te_lo"), hi = column(ms, "te_hi"), te = column(ms, "te");
  for (std::size_t k = 0; k < ms.rows.size(); ++k) {
    CHECK(std::stod(ms.rows[k][lo]) <= std::stod(ms.rows[k][hi]));
    for (std::size_t j = 1; j < 4; ++j) CHECK(std::abs(std::stod(ms.rows[k][j]) - std::stod(ex.rows[k][j])) <= 1e-9);
  }
  CHECK(std::stod(ms.rows.back()[te]) != 0.0);
  const auto summary = read_csv_file((dir / "effects_summary.csv").string());
  CHECK(summary.rows.size() == 3);

  // The exposure has no path to survival, so the total effect is zero and PE undefined.
  write_text(dir / "noexp.kv", "model.01 = X + C1\nmodel.02 = X + C1\nmodel.12 = X + C1 + T\nprofile.x = 2\nprofile.c = 0\n");
  r = run({"effects", "--input", (dir / "dataset.csv").string(), "--spec", (dir / "noexp.kv").string(), "--horizon",
           "60", "--step", "6", "--pe", "--output-dir", dir.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto pe = read_csv_file((dir / "effects_summary.csv").string());
  CHECK(pe.rows[0][column(pe, "pe")] == "undefined");
  CHECK(pe.rows[0][column(pe, "pe_defined")] == "0");

  r = run({"effects", "--input", (dir / "dataset.csv").string(), "--spec", (dir / "noexp.kv").string(),
           "--bootstrap", "1", "--output-dir", dir.string()});
  CHECK(r.code == 1);
}

TEST_CASE("experiment summary shape, method filter and resume") {
  const auto dir = fresh_dir("experiment");
  auto r = run({"experiment", "--scenario", scenario("s1.kv"), "--seed", "3", "--n", "200", "-R", "2", "-B", "5",
                "--semicompeting", "0.1,0.4", "--output-dir", dir.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto summary = read_csv_file((dir / "summary.csv").string());
  CHECK(summary.rows.size() == 18);
  for (const char* col : {"bias", "coverage", "mse", "failed_replicates"}) CHECK(column(summary, col) < summary.header.size());
  const fs::path replicates_path = dir / "first_replicates.csv";
  fs::copy_file(dir / "replicates.csv", replicates_path);

  r = run({"experiment", "--scenario", scenario("s1.kv"), "--seed", "3", "--n", "200", "-R", "2", "-B", "5",
           "--semicompeting", "0.1,0.4", "--resume", "--output-dir", dir.string()});
  REQUIRE(r.code == 0);
  // Provenance echoes --resume; the data rows must match.
  CHECK(read_csv_file((dir / "replicates.csv").string()).rows ==
        read_csv_file(replicates_path.string()).rows);

  const auto solo = fresh_dir("experiment_solo");
  r = run({"experiment", "--scenario", scenario("s1.kv"), "--seed", "3", "--n", "200", "-R", "1", "-B", "5",
           "--methods", "multistate", "--semicompeting", "0.4", "--output-dir", solo.string()});
  REQUIRE(r.code == 0);
  const auto one = read_csv_file((solo / "summary.csv").string());
  CHECK(one.rows.size() == 3);
  for (const auto& row : one.rows) CHECK(row[column(one, "method")] == "multistate");
}

TEST_CASE("config file values yield to flags") {
  const auto dir = fresh_dir("config");
  write_text(dir / "run.ini", "[simulate]\nn = 50\nseed = 4\nsemicompeting = 0.1\n");
  auto r = run({"--config", (dir / "run.ini").string(), "simulate", "--scenario", scenario("s1.kv"), "--output-dir",
                dir.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(read_csv_file((dir / "dataset.csv").string()).rows.size() == 50);
  r = run({"--config", (dir / "run.ini").string(), "simulate", "--scenario", scenario("s1.kv"), "--n", "60",
           "--output-dir", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(read_csv_file((dir / "dataset.csv").string()).rows.size() == 60);
}

TEST_CASE("stage II lookalike runs through fit and effects") {
  const auto dir = fresh_dir("stage2");
  REQUIRE(run({"simulate", "--scenario", scenario("stage2_like.kv"), "--n", "1500", "--seed", "21", "--semicompeting",
               "0.1", "--output-dir", dir.string()})
              .code == 0);
  auto r = run({"fit", "--input", (dir / "dataset.csv").string(), "--spec", scenario("stage2_like.kv"),
                "--output-dir", dir.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto report = read_csv_file((dir / "fit_report.csv").string());
  bool interaction = false, quadratic = false;
  for (const auto& row : report.rows) {
    interaction |= row[0] == "12" && row[1] == "adjusted" && row[2] == "A*C1[2]";
    quadratic |= row[0] == "12" && row[1] == "adjusted" && row[2] == "T2";
  }
  CHECK(interaction);
  CHECK(quadratic);
  r = run({"effects", "--input", (dir / "dataset.csv").string(), "--spec", scenario("stage2_like.kv"), "--horizon",
           "60", "--step", "0.5", "--pe", "--bootstrap", "10", "--output-dir", dir.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto summary = read_csv_file((dir / "effects_summary.csv").string());
  REQUIRE(summary.rows.size() == 1);
  CHECK(summary.rows[0][column(summary, "s")] == "60");
  CHECK(summary.rows[0][column(summary, "pe_defined")] == "1");
}
