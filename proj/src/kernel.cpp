#include "crbo/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace crbo {

namespace {
constexpr double kSqrt5 = 2.2360679774997896;
}

double kernel_value(const KernelSpec& spec, double r) {
  const double sf2 = spec.signal_variance;
  const double ell = spec.lengthscale;
  switch (spec.family) {
    case KernelFamily::SquaredExponential: {
      const double z = r / ell;
      return sf2 * std::exp(-0.5 * z * z);
    }
    case KernelFamily::Matern52: {
      const double c = kSqrt5 / ell;
      const double cr = c * r;
      return sf2 * (1.0 + cr + cr * cr / 3.0) * std::exp(-cr);
    }
  }
  throw std::logic_error("unknown kernel family");
}

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& a,
                   const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("kernel_eval: dimension mismatch");
  }
  return kernel_value(spec, (a - b).norm());
}

double kernel_radial_slope(const KernelSpec& spec, double r) {
  const double sf2 = spec.signal_variance;
  const double ell = spec.lengthscale;
  switch (spec.family) {
    case KernelFamily::SquaredExponential: {
      // dk/dr = -k(r) * r / ell^2, so dk/dr / r = -k(r) / ell^2.
      const double z = r / ell;
      return -sf2 * std::exp(-0.5 * z * z) / (ell * ell);
    }
    case KernelFamily::Matern52: {
      // dk/dr = -sf2 * (c^2 r / 3) (1 + c r) e^{-c r}
      const double c = kSqrt5 / ell;
      const double cr = c * r;
      return -sf2 * (c * c / 3.0) * (1.0 + cr) * std::exp(-cr);
    }
  }
  throw std::logic_error("unknown kernel family");
}

Eigen::VectorXd kernel_grad(const KernelSpec& spec, const Eigen::VectorXd& a,
                            const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("kernel_grad: dimension mismatch");
  }
  const Eigen::VectorXd diff = a - b;
  return kernel_radial_slope(spec, diff.norm()) * diff;
}

double kernel_dlengthscale(const KernelSpec& spec, double r) {
  const double sf2 = spec.signal_variance;
  const double ell = spec.lengthscale;
  switch (spec.family) {
    case KernelFamily::SquaredExponential: {
      const double z = r / ell;
      return sf2 * std::exp(-0.5 * z * z) * z * z / ell;
    }
    case KernelFamily::Matern52: {
      const double c = kSqrt5 / ell;
      const double cr = c * r;
      return sf2 * std::exp(-cr) * (c * c * r * r) * (1.0 + cr) / (3.0 * ell);
    }
  }
  throw std::logic_error("unknown kernel family");
}

}  // namespace crbo
