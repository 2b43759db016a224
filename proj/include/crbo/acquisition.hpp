#pragma once

#include <Eigen/Dense>
#include <vector>

#include "crbo/confidence_region.hpp"

namespace crbo {

struct AcquisitionConfig {
  double beta = 2.0;
  int refine_max_iters = 50;  // step floor 1e-12 ends the line search
  double constraint_tol_rel = 1e-6;  // relative to sigma_f
};

// Upper confidence bound: mu_n(q) + beta * sigma_n(q).
double ucb(const GpModel& model, const Eigen::VectorXd& q,
           const AcquisitionConfig& cfg);

// Evaluates the acquisition at every sample, then refines the best one
// with a gradient-based local search that respects the box and (for
// gamma < 1) the linearized sigma constraint, then Newton-polishes the
// first-order optimality system for a reproducible locus; falls back to
// the unpolished point (and ultimately the raw best sample) if a stage
// leaves the region or lowers the acquisition value. The returned point
// satisfies membership at constraint_tol.
Eigen::VectorXd propose(const ConfidenceRegion& region, const GpModel& model,
                        const std::vector<Eigen::VectorXd>& samples,
                        const AcquisitionConfig& cfg);

}  // namespace crbo
