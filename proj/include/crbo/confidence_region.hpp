#pragma once

#include <Eigen/Dense>
#include <vector>

#include "crbo/box.hpp"
#include "crbo/gp.hpp"

namespace crbo {

// Sublevel set { theta : sigma_n(theta) <= gamma * sigma_f } intersected
// with the enclosing box. gamma = 1 disables the sigma constraint and the
// region is the whole box.
struct ConfidenceRegion {
  double gamma = 1.0;
  const GpModel* model = nullptr;
  Box box;

  double sigma_threshold() const {
    return gamma * model->hyperparams().kernel.signal_std();
  }

  // The sigma constraint is checked with tolerance
  // max(1e-9 * sigma_f, extra_tol), absolute in output units.
  bool contains(const Eigen::VectorXd& q, double extra_tol = 0.0) const;
};

// Radius at which the single-observation posterior std reaches
// gamma * sigma_f. Closed form for the SE kernel with negligible noise,
// bisection otherwise. gamma = 1 returns +infinity (region is all of
// the box); gamma outside (0, 1] throws. Returns 0 when even the data
// point itself exceeds the threshold (large noise, small gamma).
double compute_r0(const KernelSpec& kernel, double gamma,
                  double noise_variance);

// Lipschitz worst-case lower bound on the objective at `proposal`:
// y_k - r0(gamma) * lipschitz, with theta_k the nearest dataset point
// (ties broken by lowest index).
double worst_case_bound(const ConfidenceRegion& region, const Dataset& data,
                        const Eigen::VectorXd& proposal, double lipschitz);

// Max over the samples of the GP mean gradient norm.
double estimate_lipschitz(const GpModel& model,
                          const std::vector<Eigen::VectorXd>& samples);

}  // namespace crbo
