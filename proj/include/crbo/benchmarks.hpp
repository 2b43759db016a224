#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "crbo/optimizer.hpp"
#include "crbo/rng.hpp"

namespace crbo {

// Synthetic objective drawn from a GP prior on [-1, 1]^d, conditioned on
// one center point with a fixed value so the optimum stays away from the
// domain boundary. The function is realized lazily: every noiseless query
// conditions on all previous noiseless queries, so the realization is
// self-consistent at arbitrary points without a fixed grid.
class GpSampleObjective : public Objective {
 public:
  struct Config {
    int dim = 2;
    double signal_variance = 1.0;
    double lengthscale = 0.3;
    double noise_std = 1e-3;
    double center_value = 3.0;
    KernelFamily family = KernelFamily::Matern52;
  };

  GpSampleObjective(const Config& cfg, std::uint64_t realization_seed);

  int dim() const override { return cfg_.dim; }
  Box domain() const override { return Box::centered(cfg_.dim, 1.0); }
  double evaluate(const Eigen::VectorXd& theta) override;
  std::optional<double> optimum() const override;

  // Noiseless realization value; extends the conditioning cache.
  double noiseless(const Eigen::VectorXd& theta);

  // Dense multi-start search for the global optimum of the noiseless
  // realization; caches y* and theta*. Idempotent per probe budget.
  void find_optimum(int n_probes = 1000);

  const Eigen::VectorXd& arg_optimum() const;
  std::uint64_t realization_seed() const { return seed_; }
  int cache_size() const { return n_; }

 private:
  Config cfg_;
  std::uint64_t seed_;
  RandomStream realization_rng_;
  RandomStream noise_rng_;

  // Growing conditioning cache with an incrementally extended Cholesky
  // factor of the (jittered) kernel matrix.
  Eigen::MatrixXd points_;  // capacity x d
  Eigen::VectorXd values_;  // capacity
  Eigen::MatrixXd chol_;    // capacity x capacity, lower triangular
  int n_ = 0;

  std::optional<double> y_star_;
  Eigen::VectorXd theta_star_;

  void ensure_capacity(int needed);
  void append(const Eigen::VectorXd& q, double value,
              const Eigen::VectorXd& w, double cond_var);
  Eigen::VectorXd mean_coefficients() const;  // K^{-1} values
};

// `count` independent realizations with cached optima.
std::vector<std::shared_ptr<GpSampleObjective>> make_gp_sample_suite(
    int d, int count, std::uint64_t seed);

// Uniform point at the given distance from the objective's optimum,
// resampled until inside the domain.
Eigen::VectorXd sample_initial_point(const GpSampleObjective& obj,
                                     double distance, std::uint64_t seed);

// Toy episodic policy-search task: a torque-limited inverted pendulum
// stabilized by a linear state-feedback policy theta = (k_angle, k_rate).
// The return is the sum of per-step rewards over one episode; stochastic
// through initial-state jitter.
class ToyPendulumObjective : public Objective {
 public:
  struct Config {
    double mass = 1.0;
    double length = 1.0;
    double gravity = 9.81;
    double dt = 0.05;
    int horizon = 100;
    double torque_limit = 5.0;
    double init_angle = 0.5;    // rad from upright
    double init_jitter = 0.05;  // std of the initial-angle perturbation
  };

  ToyPendulumObjective(const Config& cfg, std::uint64_t noise_seed);

  int dim() const override { return 2; }
  Box domain() const override;
  double evaluate(const Eigen::VectorXd& theta) override;

  // Deterministic episode return from a given initial angle.
  double episode_return(const Eigen::VectorXd& theta,
                        double initial_angle) const;

 private:
  Config cfg_;
  RandomStream noise_rng_;
};

}  // namespace crbo
