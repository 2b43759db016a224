#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "crbo/kernel.hpp"

namespace crbo {

struct GpHyperparams {
  KernelSpec kernel;
  double noise_variance = 1e-6;  // sigma_eps^2
};

struct GammaPrior {
  double alpha;
  double beta;

  // log p(x) = alpha log beta - log Gamma(alpha) + (alpha-1) log x - beta x
  double log_pdf(double x) const;
  double dlog_pdf(double x) const { return (alpha - 1.0) / x - beta; }
  double mode() const { return (alpha - 1.0) / beta; }
};

struct HyperPriors {
  GammaPrior signal_variance{2.0, 0.15};
  GammaPrior noise_variance{1.1, 0.05};
  GammaPrior lengthscale{3.0, 6.0};

  GpHyperparams modes(KernelFamily family = KernelFamily::Matern52) const {
    GpHyperparams hp;
    hp.kernel.family = family;
    hp.kernel.signal_variance = signal_variance.mode();
    hp.kernel.lengthscale = lengthscale.mode();
    hp.noise_variance = noise_variance.mode();
    return hp;
  }
};

// Evaluated parameter vectors with noisy scalar observations.
struct Dataset {
  Eigen::MatrixXd points;  // n x d, row-major semantics (row i = theta_i)
  Eigen::VectorXd values;  // n

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }

  void append(const Eigen::VectorXd& theta, double y);
};

// Exact GP regression model. Immutable once fitted; safe to share
// read-only across threads.
class GpModel {
 public:
  // data.values are used as-is; value_offset is added back in predict().
  // Jitter starts at 1e-10 * sigma_f^2 and escalates x10 up to
  // 1e-4 * sigma_f^2; throws std::runtime_error if the factorization
  // still fails at the largest level.
  static GpModel fit(Dataset data, const GpHyperparams& hp,
                     double value_offset = 0.0);

  // Posterior mean (uncentered) and variance clamped to [0, sigma_f^2].
  std::pair<double, double> predict(const Eigen::VectorXd& q) const;
  double posterior_std(const Eigen::VectorXd& q) const;

  // Analytic gradients of the posterior mean and std w.r.t. q.
  // At sigma_n = 0 the std gradient is defined as the zero vector.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> predict_gradients(
      const Eigen::VectorXd& q) const;

  const GpHyperparams& hyperparams() const { return hp_; }
  const Dataset& data() const { return data_; }
  double value_offset() const { return value_offset_; }
  double jitter() const { return jitter_; }
  const Eigen::MatrixXd& chol() const { return chol_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }

 private:
  GpHyperparams hp_;
  Dataset data_;
  double value_offset_ = 0.0;
  double jitter_ = 0.0;
  Eigen::MatrixXd chol_;   // lower triangular L, L L^T = K + (noise+jitter) I
  Eigen::VectorXd alpha_;  // K^{-1} y

  Eigen::VectorXd cross_covariance(const Eigen::VectorXd& q) const;
};

// Log marginal likelihood plus log Gamma-prior densities. Returns
// -infinity when the covariance is not positive definite at the base
// jitter level (the MAP optimizer treats that as a rejected point).
double log_posterior(const Dataset& data, const GpHyperparams& hp,
                     const HyperPriors& priors);

// Same value plus its gradient w.r.t. eta = log(sigma_f^2, ell, sigma_eps^2).
double log_posterior_with_grad(const Dataset& data, const GpHyperparams& hp,
                               const HyperPriors& priors,
                               Eigen::Vector3d* grad_log);

struct MapFitResult {
  GpHyperparams hyperparams;
  bool converged = false;
  int winning_start = -1;  // 0 = warm start, 1 = prior-mode restart
};

// MAP estimate of the hyperparameters via BFGS in log-parameter space,
// multi-start from `init` plus the prior modes. On total failure the
// init is returned unchanged with converged = false.
MapFitResult fit_map(const Dataset& data, const HyperPriors& priors,
                     const GpHyperparams& init);

}  // namespace crbo
