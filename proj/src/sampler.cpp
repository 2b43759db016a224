#include "crbo/sampler.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace crbo {

Eigen::VectorXd random_unit_vector(int dim, RandomStream& rng) {
  Eigen::VectorXd dir(dim);
  while (true) {
    for (int i = 0; i < dim; ++i) dir[i] = rng.normal();
    const double norm = dir.norm();
    if (norm > 1e-12) return dir / norm;
  }
}

namespace {

// Range of lambda for which current + lambda * dir stays inside the box.
// Contains 0 whenever current is inside.
std::pair<double, double> line_box_range(const Box& box,
                                         const Eigen::VectorXd& current,
                                         const Eigen::VectorXd& dir) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < box.dim(); ++i) {
    if (std::abs(dir[i]) < 1e-300) continue;
    const double a = (box.lower[i] - current[i]) / dir[i];
    const double b = (box.upper[i] - current[i]) / dir[i];
    lo = std::max(lo, std::min(a, b));
    hi = std::min(hi, std::max(a, b));
  }
  lo = std::min(lo, 0.0);
  hi = std::max(hi, 0.0);
  return {lo, hi};
}

}  // namespace

void hit_and_run_step(const ConfidenceRegion& region, ChainState& state,
                      int line_rejection_cap) {
  const Eigen::VectorXd dir =
      random_unit_vector(static_cast<int>(state.current.size()), state.rng);
  const auto [lo, hi] = line_box_range(region.box, state.current, dir);

  state.steps_taken++;
  for (int attempt = 0; attempt < line_rejection_cap; ++attempt) {
    const double lambda = state.rng.uniform(lo, hi);
    const Eigen::VectorXd candidate = state.current + lambda * dir;
    if (region.contains(candidate)) {
      state.current = candidate;
      return;
    }
  }
  state.stuck_steps++;
}

std::vector<Eigen::VectorXd> sample_region(const ConfidenceRegion& region,
                                           const Dataset& data,
                                           const SamplerConfig& cfg,
                                           std::uint64_t seed,
                                           SamplerDiagnostics* diag) {
  if (data.size() == 0) {
    throw std::invalid_argument("sample_region: empty dataset");
  }

  std::vector<int> seeds_in_region;
  for (int i = 0; i < data.size(); ++i) {
    if (region.contains(data.points.row(i).transpose())) {
      seeds_in_region.push_back(i);
    }
  }
  if (diag) {
    diag->skipped_chains = data.size() - static_cast<int>(seeds_in_region.size());
  }
  if (seeds_in_region.empty()) {
    throw std::runtime_error(
        "sample_region: no dataset point satisfies membership; the "
        "confidence region is empty");
  }

  const int n_chains = static_cast<int>(seeds_in_region.size());
  const int total = cfg.total_samples;
  const int base = total / n_chains;
  const int extra = total % n_chains;

  std::vector<Eigen::VectorXd> samples;
  samples.reserve(total);
  for (int c = 0; c < n_chains; ++c) {
    const int chain_samples = base + (c < extra ? 1 : 0);
    ChainState state(data.points.row(seeds_in_region[c]).transpose(),
                     mix_seed(seed, static_cast<std::uint64_t>(c)));
    for (int b = 0; b < cfg.burn_in; ++b) {
      hit_and_run_step(region, state, cfg.line_rejection_cap);
    }
    for (int k = 0; k < chain_samples; ++k) {
      hit_and_run_step(region, state, cfg.line_rejection_cap);
      samples.push_back(state.current);
    }
    if (diag) diag->stuck_steps += state.stuck_steps;
  }
  return samples;
}

std::vector<Eigen::VectorXd> initial_design(const Eigen::VectorXd& theta0,
                                            double radius, int count,
                                            const Box& box,
                                            RandomStream& rng) {
  if (count <= 0) {
    throw std::invalid_argument("initial_design: count must be positive");
  }
  std::vector<Eigen::VectorXd> design;
  design.reserve(count);
  for (int i = 0; i < count; ++i) {
    const Eigen::VectorXd dir =
        random_unit_vector(static_cast<int>(theta0.size()), rng);
    design.push_back(box.clip(theta0 + radius * dir));
  }
  return design;
}

}  // namespace crbo
