#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "ebib/io.hpp"
#include "ebib/posterior.hpp"

namespace ebib::experiments {

/// Parsed experiment document. Top-level keys:
///   experiment (required), seeds {count, base} (required), params, output_dir, threads,
///   dump_chains, description. Anything else is a ValidationError.
struct ExperimentConfig {
  std::string experiment;
  std::string description;
  int seed_count = 0;
  std::uint64_t seed_base = 0;
  std::string output_dir;  // relative paths resolve against the output root
  int threads = 0;         // 0: hardware concurrency
  bool dump_chains = false;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t hash = 0;  // FNV-1a of the canonical (sorted-key) document
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Checks the params block against the experiment's schema without running anything.
void validate(const ExperimentConfig& config);

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  std::string detail;
};

struct RunResult {
  std::string directory;
  std::vector<std::string> files;
  std::vector<Check> checks;
  bool passed = false;
};

/// Runs the experiment, writing every table as CSV plus summary.json into
/// <root>/<output_dir>. The pass/fail of the acceptance predicate is recorded, not thrown.
RunResult run_experiment(const ExperimentConfig& config, const std::string& output_root);

struct ExperimentInfo {
  std::string name;
  std::string description;
};
std::vector<ExperimentInfo> list_experiments();

/// Columns x, dens_1..dens_k of each representation's 1-D density on x_grid.
io::ResultTable emit_density_curves(const std::vector<PosteriorRep>& reps, const std::vector<double>& x_grid);

/// Equally spaced grid with `points` abscissae on [lo, hi].
std::vector<double> linear_grid(double lo, double hi, int points);
/// Geometric grid with `points` abscissae on [lo, hi].
std::vector<double> log_grid(double lo, double hi, int points);

}  // namespace ebib::experiments
