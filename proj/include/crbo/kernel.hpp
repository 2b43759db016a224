#pragma once

#include <Eigen/Dense>

namespace crbo {

enum class KernelFamily { Matern52, SquaredExponential };

// Stationary isotropic kernel: k(a, b) depends only on r = ||a - b||.
struct KernelSpec {
  KernelFamily family = KernelFamily::Matern52;
  double signal_variance = 1.0;  // sigma_f^2
  double lengthscale = 1.0;      // shared across dimensions

  double signal_std() const { return std::sqrt(signal_variance); }
};

// k as a function of the distance r >= 0.
double kernel_value(const KernelSpec& spec, double r);

// k(a, b); throws std::invalid_argument on dimension mismatch.
double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& a,
                   const Eigen::VectorXd& b);

// d k(a, b) / d a. Both families are C^1; the gradient vanishes at a = b.
Eigen::VectorXd kernel_grad(const KernelSpec& spec, const Eigen::VectorXd& a,
                            const Eigen::VectorXd& b);

// dk/dr / r, finite at r = 0. Used to assemble gradients without 0/0.
double kernel_radial_slope(const KernelSpec& spec, double r);

// Partial derivative of k w.r.t. the lengthscale at distance r.
double kernel_dlengthscale(const KernelSpec& spec, double r);

}  // namespace crbo
