#pragma once

#include <Eigen/Dense>

namespace crbo {

// Axis-aligned search domain with per-dimension bounds.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Box() = default;
  Box(Eigen::VectorXd lo, Eigen::VectorXd hi)
      : lower(std::move(lo)), upper(std::move(hi)) {}

  int dim() const { return static_cast<int>(lower.size()); }

  bool contains(const Eigen::VectorXd& q, double tol = 0.0) const {
    for (int i = 0; i < dim(); ++i) {
      if (q[i] < lower[i] - tol || q[i] > upper[i] + tol) return false;
    }
    return true;
  }

  Eigen::VectorXd clip(const Eigen::VectorXd& q) const {
    return q.cwiseMax(lower).cwiseMin(upper);
  }

  Eigen::VectorXd center() const { return 0.5 * (lower + upper); }

  // [-half_width, half_width]^d
  static Box centered(int d, double half_width) {
    return Box(Eigen::VectorXd::Constant(d, -half_width),
               Eigen::VectorXd::Constant(d, half_width));
  }
};

}  // namespace crbo
