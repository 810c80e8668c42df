#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace eaglass::harness {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum class Kind {
  Fe,
  DomainWall,
  Ensemble,
  Martingale,
  EdgeMartingale,
  Bounds,
  Mgf,
  Probe,
  Scaling,
  Covariance,
  OracleVerify,
};

std::string_view to_string(Kind k);
Kind kind_from_string(std::string_view s);

/// Complete description of one experiment. Together with the library
/// version it determines every output byte.
struct ExperimentConfig {
  int schema = kSchemaVersion;
  Kind kind = Kind::Ensemble;
  std::string id = "run";

  // Geometry: an L^d window at distance `margin` from the faces of the box.
  int dim = 2;
  int window = 3;
  int margin = 1;
  std::vector<int> sizes;             // scaling; edge-martingale with >= 2 sizes adds the Lindeberg rows
  int block = 2;                      // block side for the martingale decomposition
  std::vector<int> extents = {4, 4};  // torus (covariance, domain-wall) or box (oracle-verify)

  // Physics.
  std::vector<double> beta = {1.0};
  std::string distribution = "gaussian(0,1)";
  std::string bc = "free";
  std::string bc_prime = "periodic";
  std::vector<std::string> oracle_bcs = {"free", "periodic", "antiperiodic", "fixed+", "fixed-", "free/periodic"};

  // Sampling.
  int n = 2;
  int n_outer = 2;
  int bootstrap = 1000;
  std::vector<double> t = {0.5, 1.0, 2.0};
  std::vector<double> epsilon = {0.001, 0.01, 0.05, 0.1};
  double delta = 1.0;
  std::uint64_t realization = 0;  // fe, domain-wall
  std::optional<std::uint64_t> seed;
  std::string symmetric_bc = "periodic";         // Claim-1 torus pair for the martingale kind
  std::string symmetric_bc_prime = "antiperiodic";

  // Solver.
  std::string method = "auto";
  int enum_cap = 24;
  int transfer_cap = 12;

  // Output directory.
  std::string output = "eaglass-out";

  // Throws ConfigError naming the offending field.
  void validate() const;

  json to_json() const;
  // Unknown keys and schema mismatches are ConfigErrors; absent keys keep
  // their defaults.
  static ExperimentConfig from_json(const json& j);
  static ExperimentConfig load(const std::filesystem::path& path);

  bool operator==(const ExperimentConfig&) const = default;
};

struct RunOptions {
  int workers = 0;  // 0: EAGLASS_WORKERS, then hardware concurrency
  bool resume = false;
  bool timing = false;  // adds wall-clock fields; outputs are then no longer reproducible
};

struct RunOutcome {
  json report;
  bool pass = true;
  std::string status = "ok";  // ok | unsupported
  std::filesystem::path dir;
};

// Executes the experiment, streaming records to <output>/records.jsonl and
// writing report.json plus the CSV summaries.
RunOutcome run(const ExperimentConfig& config, const RunOptions& options = {});

// Rebuilds report.json and the CSV files from an existing records file.
// Throws IncompleteRunError when records are missing.
RunOutcome report(const std::filesystem::path& dir);

// Number of records a complete run produces.
std::size_t task_count(const ExperimentConfig& config);

}  // namespace eaglass::harness
