#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "fpp/experiments.hpp"

using namespace fpp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fpp_experiments_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string config_error(const ExperimentConfig& base, const json& doc) {
  try {
    apply_config_json(base, doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool mentions(const std::string& text, const std::string& part) { return text.find(part) != std::string::npos; }

ExperimentConfig small_mu(const fs::path& out, unsigned threads) {
  ExperimentConfig c = default_config(ExperimentKind::kMuAverage);
  c.replicas = 3;
  c.window_half_width = 6;
  c.alpha_span = 4;
  c.threads = threads;
  c.out_dir = out;
  return c;
}

}  // namespace

TEST_CASE("config errors name the field") {
  const ExperimentConfig base = default_config(ExperimentKind::kShape);
  CHECK(mentions(config_error(base, json{{"replicas", 1}}), "replicas"));
  CHECK(mentions(config_error(base, json{{"replicas", "ten"}}), "replicas"));
  CHECK(mentions(config_error(base, json{{"geometry", {{"shape_n", 4}}}}), "geometry.shape_n"));
  CHECK(mentions(config_error(base, json{{"schedule", {{"n", {16, -2}}}}}), "schedule.n[1]"));
  CHECK(mentions(config_error(base, json{{"schedule", {{"bogus", 1}}}}), "schedule.bogus"));
  CHECK(mentions(config_error(base, json{{"law", {{"name", "cauchy"}}}}), "law.name"));
  CHECK(mentions(config_error(base, json{{"law", {{"name", "uniform"}, {"lo", 2.0}, {"hi", 1.0}}}}), "law"));
  CHECK(mentions(config_error(base, json{{"geometry", {{"normal", {0.0, 0.0}}}}}), "geometry.normal"));
  CHECK(mentions(config_error(base, json{{"seed", -3}}), "seed"));
  CHECK(mentions(config_error(base, json{{"kind", "amn-scan"}}), "kind"));
  CHECK(mentions(config_error(base, json::array()), "config"));
  CHECK(config_error(base, json{{"kind", "shape"}, {"seed", 9}}).empty());
}

TEST_CASE("JSON parse errors report line and column") {
  const fs::path dir = scratch("parse");
  fs::create_directories(dir);
  const fs::path file = dir / "bad.json";
  std::ofstream(file) << "{\n  \"seed\": 3,\n  \"replicas\": ,\n}\n";
  try {
    read_config_file(file);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(mentions(e.what(), "bad.json:3:"));
  }
  CHECK_THROWS_AS(read_config_file(dir / "missing.json"), ConfigError);
}

TEST_CASE("kinds round trip through their names") {
  for (ExperimentKind k : all_experiment_kinds()) CHECK(kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(kind_from_string("shapes"), ConfigError);
}

TEST_CASE("effective configuration round trips") {
  for (ExperimentKind k : all_experiment_kinds()) {
    ExperimentConfig c = default_config(k);
    c.seed = 77;
    c.law = DistributionConfig::shifted_bernoulli(0.25, 1.0, 2.0);
    const json once = config_to_json(c);
    const json twice = config_to_json(apply_config_json(default_config(k), once));
    CHECK(once == twice);
  }
  ExperimentConfig one = default_config(ExperimentKind::kShape);
  one.law = DistributionConfig::constant(1.0);
  CHECK(config_to_json(apply_config_json(default_config(ExperimentKind::kShape), config_to_json(one)))["law"]["name"] ==
        "constant");
}

TEST_CASE("unknown verify suites are rejected") {
  ExperimentConfig c = default_config(ExperimentKind::kVerify);
  c.suites = {"oracle", "nonsense"};
  c.out_dir = scratch("suites");
  CHECK_THROWS_AS(run_experiment(c), ConfigError);
}

TEST_CASE("unit weights: shape output is the l1 ratio") {
  ExperimentConfig c = default_config(ExperimentKind::kShape);
  c.law = DistributionConfig::constant(1.0);
  c.replicas = 2;
  c.n_values = {16};
  c.steps_per_half_turn = 8;
  c.threads = 1;
  c.out_dir = scratch("shape");
  const RunResult r = run_experiment(c);
  CHECK(r.exit_code == 0);
  std::ifstream in(c.out_dir / "shape.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "# schema: fpp.shape/1");
  while (std::getline(in, line) && line.rfind("#", 0) == 0) {
  }
  CHECK(line == "n,theta,realized,target_x,target_y,ghat,stderr,l1_ratio");
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream s(line);
    std::vector<std::string> cell;
    for (std::string f; std::getline(s, f, ',');) cell.push_back(f);
    REQUIRE(cell.size() == 8);
    CHECK(std::stod(cell[5]) == std::stod(cell[7]));
    CHECK(std::stod(cell[6]) == 0.0);
    ++rows;
  }
  CHECK(rows == 16);
  const json report = json::parse(slurp(c.out_dir / "shape_report.json"));
  CHECK(report["schema"] == "fpp.shape-report/1");
  CHECK(fs::exists(c.out_dir / "manifest.txt"));
}

TEST_CASE("data files are identical across runs and thread counts") {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  const RunResult ra = run_experiment(small_mu(a, 1));
  const RunResult rb = run_experiment(small_mu(b, 3));
  CHECK(ra.exit_code == 0);
  REQUIRE(ra.files == rb.files);
  REQUIRE_FALSE(ra.files.empty());
  for (const std::string& f : ra.files) {
    if (f == "manifest.txt") continue;
    INFO(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const std::string manifest = slurp(a / "manifest.txt");
  CHECK(mentions(manifest, "schema_version: 1"));
  CHECK(mentions(manifest, "kind: mu-average"));
  CHECK(mentions(manifest, "exit_code: 0"));
}
