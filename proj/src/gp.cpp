#include "crbo/gp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace crbo {

namespace {

constexpr double kBaseJitterRel = 1e-10;
constexpr double kMaxJitterRel = 1e-4;
constexpr double kLog2Pi = 1.8378770664093453;

Eigen::MatrixXd gram_matrix(const KernelSpec& spec,
                            const Eigen::MatrixXd& points) {
  const int n = static_cast<int>(points.rows());
  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i) {
    gram(i, i) = spec.signal_variance;
    for (int j = 0; j < i; ++j) {
      const double r = (points.row(i) - points.row(j)).norm();
      gram(i, j) = gram(j, i) = kernel_value(spec, r);
    }
  }
  return gram;
}

}  // namespace

double GammaPrior::log_pdf(double x) const {
  return alpha * std::log(beta) - std::lgamma(alpha) +
         (alpha - 1.0) * std::log(x) - beta * x;
}

void Dataset::append(const Eigen::VectorXd& theta, double y) {
  const int n = size();
  if (n == 0) {
    points.resize(1, theta.size());
  } else {
    if (theta.size() != dim()) {
      throw std::invalid_argument("Dataset::append: dimension mismatch");
    }
    points.conservativeResize(n + 1, Eigen::NoChange);
  }
  points.row(n) = theta.transpose();
  values.conservativeResize(n + 1);
  values[n] = y;
}

GpModel GpModel::fit(Dataset data, const GpHyperparams& hp,
                     double value_offset) {
  GpModel model;
  model.hp_ = hp;
  model.data_ = std::move(data);
  model.value_offset_ = value_offset;

  const int n = model.data_.size();
  if (n == 0) {
    model.jitter_ = 0.0;
    return model;
  }

  const Eigen::MatrixXd gram = gram_matrix(hp.kernel, model.data_.points);
  double jitter = kBaseJitterRel * hp.kernel.signal_variance;
  const double max_jitter = kMaxJitterRel * hp.kernel.signal_variance;
  while (true) {
    Eigen::MatrixXd cov = gram;
    cov.diagonal().array() += hp.noise_variance + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success) {
      model.chol_ = llt.matrixL();
      model.alpha_ = llt.solve(model.data_.values);
      model.jitter_ = jitter;
      return model;
    }
    if (jitter >= max_jitter) {
      throw std::runtime_error(
          "GpModel::fit: Cholesky factorization failed at jitter level " +
          std::to_string(jitter));
    }
    jitter *= 10.0;
  }
}

Eigen::VectorXd GpModel::cross_covariance(const Eigen::VectorXd& q) const {
  const int n = data_.size();
  Eigen::VectorXd k(n);
  for (int i = 0; i < n; ++i) {
    const double r = (q.transpose() - data_.points.row(i)).norm();
    k[i] = kernel_value(hp_.kernel, r);
  }
  return k;
}

std::pair<double, double> GpModel::predict(const Eigen::VectorXd& q) const {
  const double sf2 = hp_.kernel.signal_variance;
  if (data_.size() == 0) {
    return {value_offset_, sf2};
  }
  if (q.size() != data_.dim()) {
    throw std::invalid_argument("GpModel::predict: dimension mismatch");
  }
  const Eigen::VectorXd k = cross_covariance(q);
  const double mean = k.dot(alpha_) + value_offset_;
  const Eigen::VectorXd w =
      chol_.triangularView<Eigen::Lower>().solve(k);
  double var = sf2 - w.squaredNorm();
  var = std::min(std::max(var, 0.0), sf2);
  return {mean, var};
}

double GpModel::posterior_std(const Eigen::VectorXd& q) const {
  return std::sqrt(predict(q).second);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> GpModel::predict_gradients(
    const Eigen::VectorXd& q) const {
  const int d = static_cast<int>(q.size());
  const int n = data_.size();
  if (n == 0) {
    return {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d)};
  }
  if (d != data_.dim()) {
    throw std::invalid_argument(
        "GpModel::predict_gradients: dimension mismatch");
  }

  // Rows of G are the gradients d k(q, theta_i) / d q.
  Eigen::MatrixXd grad_k(n, d);
  Eigen::VectorXd k(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd diff = q.transpose() - data_.points.row(i);
    const double r = diff.norm();
    k[i] = kernel_value(hp_.kernel, r);
    grad_k.row(i) =
        (kernel_radial_slope(hp_.kernel, r) * diff).transpose();
  }

  const Eigen::VectorXd dmean = grad_k.transpose() * alpha_;

  const Eigen::VectorXd w = chol_.triangularView<Eigen::Lower>().solve(k);
  const Eigen::VectorXd kinv_k =
      chol_.transpose().triangularView<Eigen::Upper>().solve(w);
  const Eigen::VectorXd dvar = -2.0 * (grad_k.transpose() * kinv_k);

  double var = hp_.kernel.signal_variance - w.squaredNorm();
  var = std::max(var, 0.0);
  const double sigma = std::sqrt(var);
  Eigen::VectorXd dstd = Eigen::VectorXd::Zero(d);
  if (sigma > 1e-12 * hp_.kernel.signal_std()) {
    dstd = dvar / (2.0 * sigma);
  }
  return {dmean, dstd};
}

namespace {

double log_prior_terms(const GpHyperparams& hp, const HyperPriors& priors) {
  return priors.signal_variance.log_pdf(hp.kernel.signal_variance) +
         priors.lengthscale.log_pdf(hp.kernel.lengthscale) +
         priors.noise_variance.log_pdf(hp.noise_variance);
}

}  // namespace

double log_posterior(const Dataset& data, const GpHyperparams& hp,
                     const HyperPriors& priors) {
  return log_posterior_with_grad(data, hp, priors, nullptr);
}

double log_posterior_with_grad(const Dataset& data, const GpHyperparams& hp,
                               const HyperPriors& priors,
                               Eigen::Vector3d* grad_log) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  if (hp.kernel.signal_variance <= 0.0 || hp.kernel.lengthscale <= 0.0 ||
      hp.noise_variance < 0.0) {
    if (grad_log) grad_log->setZero();
    return neg_inf;
  }

  const double sf2 = hp.kernel.signal_variance;
  const double ell = hp.kernel.lengthscale;
  const double sn2 = hp.noise_variance;

  double value = log_prior_terms(hp, priors);
  Eigen::Vector3d grad_nat;  // d/d(sf2, ell, sn2)
  grad_nat[0] = priors.signal_variance.dlog_pdf(sf2);
  grad_nat[1] = priors.lengthscale.dlog_pdf(ell);
  grad_nat[2] = priors.noise_variance.dlog_pdf(sn2);

  const int n = data.size();
  if (n > 0) {
    Eigen::MatrixXd gram = gram_matrix(hp.kernel, data.points);
    Eigen::MatrixXd cov = gram;
    cov.diagonal().array() += sn2 + kBaseJitterRel * sf2;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
      if (grad_log) grad_log->setZero();
      return neg_inf;
    }
    const Eigen::MatrixXd lower = llt.matrixL();
    const Eigen::VectorXd alpha = llt.solve(data.values);
    value += -0.5 * data.values.dot(alpha) -
             lower.diagonal().array().log().sum() - 0.5 * n * kLog2Pi;

    if (grad_log) {
      const Eigen::MatrixXd kinv =
          llt.solve(Eigen::MatrixXd::Identity(n, n));
      // d lml / d psi = 0.5 * tr((alpha alpha^T - K^{-1}) dK/dpsi)
      const Eigen::MatrixXd outer = alpha * alpha.transpose() - kinv;

      // dK/d sf2 = gram / sf2 (kernel is linear in the signal variance).
      grad_nat[0] += 0.5 * (outer.cwiseProduct(gram)).sum() / sf2;

      Eigen::MatrixXd dk_dell(n, n);
      for (int i = 0; i < n; ++i) {
        dk_dell(i, i) = 0.0;
        for (int j = 0; j < i; ++j) {
          const double r = (data.points.row(i) - data.points.row(j)).norm();
          dk_dell(i, j) = dk_dell(j, i) = kernel_dlengthscale(hp.kernel, r);
        }
      }
      grad_nat[1] += 0.5 * (outer.cwiseProduct(dk_dell)).sum();
      grad_nat[2] += 0.5 * outer.trace();
    }
  }

  if (grad_log) {
    // Chain rule into eta = log(sf2, ell, sn2).
    (*grad_log)[0] = sf2 * grad_nat[0];
    (*grad_log)[1] = ell * grad_nat[1];
    (*grad_log)[2] = sn2 * grad_nat[2];
  }
  return value;
}

namespace {

constexpr int kMapMaxIters = 200;
constexpr double kMapGradTol = 1e-6;
constexpr double kLogParamMin = -27.6;  // ~ log(1e-12)
constexpr double kLogParamMax = 13.8;   // ~ log(1e6)

GpHyperparams from_log(const Eigen::Vector3d& eta, KernelFamily family) {
  GpHyperparams hp;
  hp.kernel.family = family;
  hp.kernel.signal_variance = std::exp(eta[0]);
  hp.kernel.lengthscale = std::exp(eta[1]);
  hp.noise_variance = std::exp(eta[2]);
  return hp;
}

struct BfgsOutcome {
  Eigen::Vector3d eta;
  double value = -std::numeric_limits<double>::infinity();
  bool converged = false;
};

// Dense BFGS ascent on the log posterior in log-parameter space with
// Armijo backtracking.
BfgsOutcome bfgs_maximize(const Dataset& data, const HyperPriors& priors,
                          KernelFamily family, Eigen::Vector3d eta) {
  auto eval = [&](const Eigen::Vector3d& e, Eigen::Vector3d* g) {
    return log_posterior_with_grad(data, from_log(e, family), priors, g);
  };

  BfgsOutcome out;
  Eigen::Vector3d grad;
  double f = eval(eta, &grad);
  if (!std::isfinite(f)) return out;

  Eigen::Matrix3d hess_inv = Eigen::Matrix3d::Identity();
  for (int iter = 0; iter < kMapMaxIters; ++iter) {
    if (grad.norm() < kMapGradTol) {
      out.converged = true;
      break;
    }
    Eigen::Vector3d dir = hess_inv * grad;
    if (dir.dot(grad) <= 0.0) dir = grad;  // restore ascent direction

    double step = 1.0;
    const double slope = dir.dot(grad);
    Eigen::Vector3d eta_new;
    Eigen::Vector3d grad_new;
    double f_new = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      eta_new = (eta + step * dir)
                    .cwiseMax(kLogParamMin)
                    .cwiseMin(kLogParamMax);
      f_new = eval(eta_new, &grad_new);
      if (std::isfinite(f_new) && f_new >= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Eigen::Vector3d s = eta_new - eta;
    const Eigen::Vector3d y = grad - grad_new;  // gradient of -f changes sign
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      const Eigen::Matrix3d id = Eigen::Matrix3d::Identity();
      const Eigen::Matrix3d v = id - s * y.transpose() / sy;
      hess_inv = v * hess_inv * v.transpose() + s * s.transpose() / sy;
    } else {
      hess_inv = Eigen::Matrix3d::Identity();
    }
    eta = eta_new;
    grad = grad_new;
    f = f_new;
    if (s.norm() < 1e-12) {
      out.converged = grad.norm() < kMapGradTol;
      break;
    }
  }
  out.eta = eta;
  out.value = f;
  return out;
}

// Newton refinement from a near-optimal point: finite-difference Hessian
// of the analytic gradient, quadratic convergence onto the stationary
// point. Pins the result to the optimum itself rather than wherever the
// quasi-Newton path happened to stop, so the fit is insensitive to
// last-bit perturbations of the observations.
BfgsOutcome newton_polish(const Dataset& data, const HyperPriors& priors,
                          KernelFamily family, BfgsOutcome in) {
  auto eval = [&](const Eigen::Vector3d& e, Eigen::Vector3d* g) {
    return log_posterior_with_grad(data, from_log(e, family), priors, g);
  };
  Eigen::Vector3d eta = in.eta;
  Eigen::Vector3d grad;
  double f = eval(eta, &grad);
  if (!std::isfinite(f)) return in;

  for (int iter = 0; iter < 10; ++iter) {
    if (grad.norm() < 1e-12) break;
    const double h = 1e-5;
    Eigen::Matrix3d hess;
    for (int j = 0; j < 3; ++j) {
      Eigen::Vector3d ep = eta, em = eta;
      ep[j] += h;
      em[j] -= h;
      Eigen::Vector3d gp, gm;
      if (!std::isfinite(eval(ep, &gp)) || !std::isfinite(eval(em, &gm))) {
        return in;
      }
      hess.col(j) = (gp - gm) / (2 * h);
    }
    hess = 0.5 * (hess + hess.transpose()).eval();
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(hess);
    // Only step while the curvature certifies a local maximum.
    if (es.eigenvalues().maxCoeff() >= -1e-10) break;
    Eigen::Vector3d step =
        -es.eigenvectors() *
        (es.eigenvectors().transpose() * grad).cwiseQuotient(
            es.eigenvalues().eval());
    if (step.norm() > 1.0) step *= 1.0 / step.norm();
    const Eigen::Vector3d eta_new =
        (eta + step).cwiseMax(kLogParamMin).cwiseMin(kLogParamMax);
    Eigen::Vector3d grad_new;
    const double f_new = eval(eta_new, &grad_new);
    if (!std::isfinite(f_new) || grad_new.norm() >= grad.norm()) break;
    eta = eta_new;
    grad = grad_new;
    f = f_new;
  }
  in.eta = eta;
  in.value = f;
  in.converged = in.converged || grad.norm() < kMapGradTol;
  return in;
}

Eigen::Vector3d to_log(const GpHyperparams& hp) {
  const double noise_floor = 1e-12;
  return Eigen::Vector3d(
      std::log(std::max(hp.kernel.signal_variance, noise_floor)),
      std::log(std::max(hp.kernel.lengthscale, noise_floor)),
      std::log(std::max(hp.noise_variance, noise_floor)));
}

}  // namespace

MapFitResult fit_map(const Dataset& data, const HyperPriors& priors,
                     const GpHyperparams& init) {
  if (data.size() == 0) {
    throw std::invalid_argument("fit_map: dataset is empty");
  }
  const KernelFamily family = init.kernel.family;
  const Eigen::Vector3d starts[2] = {
      to_log(init), to_log(priors.modes(family))};

  MapFitResult result;
  result.hyperparams = init;
  double best = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < 2; ++s) {
    const BfgsOutcome out = newton_polish(
        data, priors, family, bfgs_maximize(data, priors, family, starts[s]));
    if (std::isfinite(out.value) && out.value > best) {
      best = out.value;
      result.hyperparams = from_log(out.eta, family);
      result.converged = out.converged;
      result.winning_start = s;
    }
  }
  return result;
}

}  // namespace crbo
