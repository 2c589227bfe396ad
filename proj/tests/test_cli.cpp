#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "doctest.h"
#include "pipeline.hpp"

using namespace ergojump;
using namespace ergojump::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("ergojump_cli_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int error_line(const std::string& text) {
  try {
    parse_config(text, "cfg.json", std::nullopt);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("inadmissible cube parameters are reported at their line") {
  const std::string text = "{\n  \"space\": {\"group\": \"Z_64\"},\n  \"hk\": {\n    \"delta\": 4,\n    \"C0\": 2\n  }\n}\n";
  try {
    parse_config(text, "cfg.json", std::nullopt);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(e.line() == 5);
    CHECK(msg.rfind("cfg.json:5: error:", 0) == 0);
    CHECK(msg.find("18*C0/delta <= c0") != std::string::npos);
  }
}

TEST_CASE("config syntax and schema errors carry a line") {
  CHECK(error_line("{\n  \"seed\": 1,\n  \"space\": {\"group\": \"Z_64\",}\n}\n") == 3);
  CHECK(error_line("{\n  \"seed\": 1,\n  \"bogus\": 2\n}\n") == 3);
  CHECK(error_line("{\n  \"space\": {\n    \"group\": \"Q_9\"\n  }\n}\n") == 3);
  CHECK(error_line("{\n  \"verify\": {\n    \"trials\": 3,\n    \"suites\": [\"nope\"]\n  }\n}\n") == 4);
  CHECK(error_line("{\n  \"probe\": {\n    \"p\": \"two\"\n  }\n}\n") == 3);
  CHECK(error_line("{\"space\": {\"group\": \"Z^2\"}}") == 1);  // infinite group without radius
  CHECK(error_line("{\"seed\": 3}") == 0);
}

TEST_CASE("seed override changes the hash") {
  const std::string text = "{\"seed\": 1, \"space\": {\"group\": \"Z_64\"}}";
  const auto a = parse_config(text, "a", std::nullopt);
  const auto b = parse_config(text, "a", 2);
  const auto c = parse_config(text, "b", 1);
  CHECK(a.seed == 1);
  CHECK(b.seed == 2);
  CHECK(a.sha256 != b.sha256);
  CHECK(a.sha256 == c.sha256);
  CHECK(a.sha256.size() == 64);
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("minimal axioms run succeeds and stamps every file") {
  const auto c = parse_config("{\"space\": {\"group\": \"Z_64\"}}", "min.json", std::nullopt);
  const auto out = scratch("min");
  const auto r = run_command("verify", c, out);
  CHECK(r.exit_code == 0);
  CHECK(r.failures.empty());
  for (const auto& name : r.files) {
    const auto body = slurp(out / name);
    if (name.ends_with(".csv")) CHECK(body.rfind("# config_sha256=" + c.sha256, 0) == 0);
    if (name.ends_with(".json")) CHECK(body.find(c.sha256) != std::string::npos);
  }
  CHECK(slurp(out / "summary.txt").find("axioms        PASS") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("repeated runs are byte identical across thread counts") {
  const auto c = parse_config(R"({"seed": 5, "space": {"random_points": {"n": 60, "side": 200, "seed": 2}},
    "verify": {"suites": ["axioms", "martingale", "gundy", "domination"], "trials": 3, "gundy_instances": 5},
    "probe": {"operators": ["S", "Md"], "trials": 6}})",
                              "det.json", std::nullopt);
  const auto a = scratch("det_a"), b = scratch("det_b");
  set_thread_count(1);
  const auto ra = run_command("run", c, a);
  set_thread_count(3);
  const auto rb = run_command("run", c, b);
  set_thread_count(0);
  CHECK(ra.exit_code == 0);
  REQUIRE(ra.files == rb.files);
  for (const auto& name : ra.files) CHECK(sha256_hex(slurp(a / name)) == sha256_hex(slurp(b / name)));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("verify reports failing suites through the exit code") {
  // transference needs a group quotient; a point cloud cannot satisfy it
  const auto c = parse_config(R"({"space": {"random_points": {"n": 20, "side": 50}},
    "verify": {"suites": ["transference"]}})",
                              "bad.json", std::nullopt);
  const auto out = scratch("bad");
  const auto r = run_command("verify", c, out);
  CHECK(r.exit_code == 1);
  CHECK_FALSE(r.failures.empty());
  fs::remove_all(out);
}

TEST_CASE("report on empty, missing and populated bundles") {
  std::ostringstream out, err;
  const auto empty = scratch("empty");
  fs::create_directories(empty);
  CHECK(report(empty, out, err) == 0);
  CHECK(out.str() == "no suites run\n");
  CHECK(report(scratch("missing"), out, err) == 2);
  CHECK(err.str().find("does not exist") != std::string::npos);

  const auto c = parse_config(R"({"seed": 9, "space": {"group": "Z_64"},
    "probe": {"operators": ["S"], "trials": 9, "ensembles": ["gaussian"]},
    "experiment": {"system": "rotation:Z_256:a=1", "radii": {"from": 1, "to": 127}}})",
                              "rep.json", std::nullopt);
  const auto dir = scratch("rep");
  REQUIRE(run_command("probe", c, dir).exit_code == 0);
  REQUIRE(run_command("experiment", c, dir).exit_code == 0);
  std::ostringstream text;
  CHECK(report(dir, text, err) == 0);
  const auto s = text.str();
  CHECK(s.find("tails:") != std::string::npos);
  CHECK(s.find("rotation:Z_256:a=1") != std::string::npos);

  // the strong-ratio median printed must be recomputed from the raw rows
  std::ifstream csv(dir / "probe_S.csv");
  std::string line;
  std::vector<double> strong;
  while (std::getline(csv, line)) {
    if (line.rfind("S,", 0) != 0 || line.find(",strong,") == std::string::npos) continue;
    strong.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  }
  REQUIRE(strong.size() == 9);
  const auto q = summarize_ratios(strong);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", q.q50);
  CHECK(slurp(dir / "report.csv").find("probes,S:strong,q50," + std::string(buf)) != std::string::npos);

  std::size_t tail_rows = 0;
  std::istringstream rc(slurp(dir / "report.csv"));
  while (std::getline(rc, line))
    if (line.rfind("tails,", 0) == 0 && line.find(",c2,") != std::string::npos) ++tail_rows;
  CHECK(tail_rows == 1);
  fs::remove_all(empty);
  fs::remove_all(dir);
}
