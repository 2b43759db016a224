#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crbo/acquisition.hpp"
#include "crbo/box.hpp"
#include "crbo/gp.hpp"
#include "crbo/sampler.hpp"

#include <json.hpp>

namespace crbo {

// Black-box oracle: a noisy scalar return per evaluated parameter vector.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual int dim() const = 0;
  virtual Box domain() const = 0;
  virtual double evaluate(const Eigen::VectorXd& theta) = 0;
  // Known optimum value, when available (enables the regret metric).
  virtual std::optional<double> optimum() const { return std::nullopt; }
};

struct CrboConfig {
  double gamma = 0.6;
  int budget = 50;
  Box box;
  int n_init = 0;  // 0 -> ceil(sqrt(d))
  SamplerConfig sampler;
  AcquisitionConfig acquisition;
  HyperPriors priors;
  KernelFamily kernel_family = KernelFamily::Matern52;
  std::optional<GpHyperparams> init_hyperparams;  // default: prior modes
  std::uint64_t seed = 0;
};

// Full optimization trace of one run.
struct RunRecord {
  std::string method;  // "crbo" or "standard_bo"
  double gamma = 1.0;
  int n_init = 0;
  int budget = 0;
  std::uint64_t seed = 0;

  std::vector<Eigen::VectorXd> proposals;  // every evaluated point, in order
  std::vector<double> observations;

  // Per BO iteration (after the initial design):
  std::vector<GpHyperparams> hyperparam_history;
  std::vector<double> bound_history;  // Eq.-style worst-case lower bounds
  std::vector<bool> fit_warnings;     // MAP fit did not converge
  std::vector<double> wall_time;      // seconds

  std::vector<double> simple_regret_curve;  // empty if optimum unknown
  std::vector<double> average_return_curve;
  bool complete = true;

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

// Centered copy of the dataset (y_i - max_j y_j) plus the offset.
std::pair<Dataset, double> center_values(const Dataset& data);

// s_n = min_{t <= n} |y_t - y_star|; nonincreasing by construction.
std::vector<double> simple_regret(const std::vector<double>& observations,
                                  double y_star);

// Running mean of the observations.
std::vector<double> average_return(const std::vector<double>& observations);

struct CurveSummary {
  std::vector<double> median;
  std::vector<double> q25;
  std::vector<double> q75;
};

struct RunSummary {
  int budget = 0;
  bool has_regret = false;
  CurveSummary simple_regret;
  CurveSummary average_return;
};

// Per-iteration median and quartiles (linear-interpolation percentiles)
// across runs. All records must share the same budget.
RunSummary aggregate_runs(const std::vector<RunRecord>& records);

// Linear-interpolation percentile (p in [0, 1]) of an unsorted sample.
double percentile(std::vector<double> values, double p);

// The CRBO loop: evaluate theta0, then the sphere initial design, then
// iterate fit -> sample -> propose -> evaluate until the budget is spent.
RunRecord run_crbo(Objective& obj, const Eigen::VectorXd& theta0,
                   const CrboConfig& cfg);

// Same pipeline with the sigma constraint disabled and the acquisition
// search seeded by uniform box samples instead of Hit-and-Run.
RunRecord run_standard_bo(Objective& obj, const Eigen::VectorXd& theta0,
                          const CrboConfig& cfg);

}  // namespace crbo
