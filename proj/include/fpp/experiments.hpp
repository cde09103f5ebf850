#pragma once

// Experiment configuration, seeded replica runs and result files.
//
// Every run writes data files (CSV for fields and curves, JSON for reports)
// and a plain-text manifest.txt. Data files depend only on the configuration
// and base seed; wall time and the code version go to the manifest only.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fpp/line_geometry.hpp"
#include "fpp/weight_field.hpp"

namespace fpp {

inline constexpr int kSchemaVersion = 1;

enum class ExperimentKind {
  kShape,
  kBusemannVerify,
  kGraphCoalescence,
  kAmnScan,
  kMuAverage,
  kRhoShape,
  kMeanIdentity,
  kVerify,
};

std::string to_string(ExperimentKind kind);
ExperimentKind kind_from_string(const std::string& name);
const std::vector<ExperimentKind>& all_experiment_kinds();

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kShape;
  DistributionConfig law = DistributionConfig::exponential(1.0);
  std::uint64_t seed = 1;
  int replicas = 20;
  unsigned threads = 0;  // 0: default_threads()

  // Geometry.
  int domain_half_width = 0;  // 0: derived from the schedule
  int window_half_width = 0;  // 0: derived
  double theta = 0.0;         // direction of the boundary point w
  std::optional<Vec2> normal; // explicit functional; otherwise fitted from a shape estimate at theta
  int shape_n = 64;           // n for the shape estimate that fixes the functional
  int shape_replicas = 20;
  int steps_per_half_turn = 64;
  Vertex x{1, 0};             // mean identity: f(-x, 0)

  // Schedule.
  std::vector<double> n_values;  // ladder; meaning depends on the kind
  std::vector<double> alphas;
  double h = 1.0;
  double alpha_span = 16.0;
  int m = 3;
  int pair_box = 5;
  int n_radial = 32;
  std::vector<int> ladder{16, 32, 64};
  std::vector<int> cluster_sizes{50, 100, 200};
  int cluster_replicas = 400;
  std::vector<int> encounter_sizes{10, 20, 40};
  int samples = 5;
  int pairs_per_sample = 20;
  std::vector<std::string> suites;  // verify only

  std::filesystem::path out_dir = "out";
  nlohmann::json echo;  // configuration as given, for the manifest
};

// Defaults for a kind, before any file or flag overrides.
ExperimentConfig default_config(ExperimentKind kind);

// Applies a JSON object on top of `base`. Unknown keys and bad values raise
// ConfigError naming the field.
ExperimentConfig apply_config_json(ExperimentConfig base, const nlohmann::json& doc);

// Effective configuration as a JSON document accepted by apply_config_json.
nlohmann::json config_to_json(const ExperimentConfig& config);

// Reads a JSON file; parse errors report line and column.
nlohmann::json read_config_file(const std::filesystem::path& path);

struct Failure {
  std::string suite;
  std::string invariant;
  std::string detail;
};

struct RunResult {
  int exit_code = 0;
  std::vector<std::string> files;
  long boundary_flags = 0;
  long hard_violations = 0;
  std::vector<Failure> failures;
  nlohmann::json summary;
};

// Runs one experiment (or the verify suites) and writes its files into
// config.out_dir, creating it if needed.
RunResult run_experiment(const ExperimentConfig& config);

// Linear functional used by the line-based experiments: the explicit normal
// if given, else the supporting functional of a shape estimate at theta.
LinearFunctional resolve_functional(const ExperimentConfig& config, std::optional<ShapeEstimate>* shape_out = nullptr);

std::string code_version();

}  // namespace fpp
