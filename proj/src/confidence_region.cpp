#include "crbo/confidence_region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace crbo {

namespace {
constexpr double kMembershipTolRel = 1e-9;

// Posterior std at distance r from a single observation.
double single_point_std(const KernelSpec& kernel, double noise_variance,
                        double r) {
  const double sf2 = kernel.signal_variance;
  const double k = kernel_value(kernel, r);
  const double var = sf2 - k * k / (sf2 + noise_variance);
  return std::sqrt(std::max(var, 0.0));
}

}  // namespace

bool ConfidenceRegion::contains(const Eigen::VectorXd& q,
                                double extra_tol) const {
  if (!box.contains(q)) return false;
  if (gamma >= 1.0) return true;
  const double sigma_f = model->hyperparams().kernel.signal_std();
  const double tol = std::max(kMembershipTolRel * sigma_f, extra_tol);
  return model->posterior_std(q) <= gamma * sigma_f + tol;
}

double compute_r0(const KernelSpec& kernel, double gamma,
                  double noise_variance) {
  if (gamma <= 0.0 || gamma > 1.0) {
    throw std::invalid_argument("compute_r0: gamma must be in (0, 1]");
  }
  if (gamma == 1.0) {
    return std::numeric_limits<double>::infinity();
  }

  const double sf2 = kernel.signal_variance;
  const double ell = kernel.lengthscale;
  if (kernel.family == KernelFamily::SquaredExponential &&
      noise_variance <= 1e-6 * sf2) {
    return std::sqrt(-2.0 * ell * ell * std::log(std::sqrt(1.0 - gamma * gamma)));
  }

  // sigma_0(r) is strictly increasing in r; bisect on (0, 20 ell].
  const double target = gamma * std::sqrt(sf2);
  if (single_point_std(kernel, noise_variance, 0.0) >= target) {
    return 0.0;  // even the data point exceeds the threshold
  }
  double lo = 0.0;
  double hi = 20.0 * ell;
  if (single_point_std(kernel, noise_variance, hi) < target) {
    return hi;
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (single_point_std(kernel, noise_variance, mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-15 * ell) break;
  }
  return 0.5 * (lo + hi);
}

double worst_case_bound(const ConfidenceRegion& region, const Dataset& data,
                        const Eigen::VectorXd& proposal, double lipschitz) {
  if (data.size() == 0) {
    throw std::invalid_argument("worst_case_bound: empty dataset");
  }
  if (lipschitz < 0.0) {
    throw std::invalid_argument("worst_case_bound: negative Lipschitz bound");
  }
  int nearest = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < data.size(); ++i) {
    const double dist = (proposal.transpose() - data.points.row(i)).norm();
    if (dist < best) {
      best = dist;
      nearest = i;
    }
  }
  const double r0 =
      compute_r0(region.model->hyperparams().kernel, region.gamma,
                 region.model->hyperparams().noise_variance);
  return data.values[nearest] - r0 * lipschitz;
}

double estimate_lipschitz(const GpModel& model,
                          const std::vector<Eigen::VectorXd>& samples) {
  double max_norm = 0.0;
  for (const auto& q : samples) {
    max_norm = std::max(max_norm, model.predict_gradients(q).first.norm());
  }
  return max_norm;
}

}  // namespace crbo
