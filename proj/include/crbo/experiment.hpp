#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "crbo/optimizer.hpp"

namespace crbo {

// Configuration of a benchmark experiment: which method, which objective
// suite, and the run matrix (gammas x realizations x repetitions).
struct ExperimentConfig {
  std::string method = "crbo";  // crbo | standard_bo
  std::string suite = "gp2d";   // gp2d | gp5d | pendulum
  int realizations = 20;
  int repetitions = 1;
  std::vector<double> gammas = {0.6};
  int budget = 50;
  std::uint64_t seed = 2024;
  double beta = 2.0;
  int samples = 1000;  // Hit-and-Run / box sample count per iteration
  double initial_distance = 0.3;  // distance of theta0 to the optimum
  std::string output_dir = "results";
  int workers = 0;  // 0 -> logical cores

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);

  // Throws std::invalid_argument with a field diagnostic when invalid.
  void validate() const;
};

// Loads and validates a JSON config file; throws std::invalid_argument
// with file/field diagnostics.
ExperimentConfig load_config(const std::string& path);

// Executes the full run matrix on a bounded worker pool, writes one
// RunRecord file per run plus aggregate tables into output_dir.
// Returns 0 on success, 1 on partial failure.
int run_experiment(const ExperimentConfig& cfg, std::ostream& log);

// Aggregates RunRecord files found in results_dir into plot-ready
// delimited tables and a text summary. Returns 0 on success, 2 when the
// directory is empty or the records are inconsistent.
int write_report(const std::string& results_dir, std::ostream& log);

}  // namespace crbo
