#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "crbo/confidence_region.hpp"
#include "crbo/rng.hpp"

namespace crbo {

struct SamplerConfig {
  int total_samples = 1000;     // K
  int line_rejection_cap = 100;
  int burn_in = 0;              // per chain
};

struct ChainState {
  Eigen::VectorXd current;
  RandomStream rng;
  long steps_taken = 0;
  long stuck_steps = 0;

  ChainState(Eigen::VectorXd start, std::uint64_t seed)
      : current(std::move(start)), rng(seed) {}
};

struct SamplerDiagnostics {
  long stuck_steps = 0;
  int skipped_chains = 0;  // seed points that failed membership
};

// One Hit-and-Run step: uniform random direction, analytic clipping of
// the line to the box, 1-D rejection on region membership for the step
// length. If the rejection cap is hit the chain stays put (stuck step).
void hit_and_run_step(const ConfidenceRegion& region, ChainState& state,
                      int line_rejection_cap = 100);

// K samples pooled from chains seeded at each dataset point. Chain i
// contributes floor(K/n) or ceil(K/n) samples; output order is fixed by
// chain index then step index, so the result is seed-deterministic.
std::vector<Eigen::VectorXd> sample_region(const ConfidenceRegion& region,
                                           const Dataset& data,
                                           const SamplerConfig& cfg,
                                           std::uint64_t seed,
                                           SamplerDiagnostics* diag = nullptr);

// n_init points uniformly distributed on the sphere of the given radius
// around theta0, each clipped into the box per coordinate.
std::vector<Eigen::VectorXd> initial_design(const Eigen::VectorXd& theta0,
                                            double radius, int count,
                                            const Box& box,
                                            RandomStream& rng);

// Uniform direction on the unit sphere.
Eigen::VectorXd random_unit_vector(int dim, RandomStream& rng);

}  // namespace crbo
