#include "crbo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace crbo {

double ucb(const GpModel& model, const Eigen::VectorXd& q,
           const AcquisitionConfig& cfg) {
  const auto [mean, var] = model.predict(q);
  return mean + cfg.beta * std::sqrt(var);
}

namespace {

// Last sigma-feasible point on the segment from `from` (feasible) to
// `to` (infeasible); both endpoints are inside the box.
Eigen::VectorXd bisect_to_boundary(const ConfidenceRegion& region,
                                   const Eigen::VectorXd& from,
                                   const Eigen::VectorXd& to) {
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (region.contains(from + mid * (to - from))) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return from + lo * (to - from);
}

// Projected gradient ascent on the acquisition with the sigma constraint
// linearized at the current iterate (active-set projection) and a
// feasibility-restoring bisection on overshoot.
Eigen::VectorXd refine(const ConfidenceRegion& region, const GpModel& model,
                       const Eigen::VectorXd& start,
                       const AcquisitionConfig& cfg) {
  const double sigma_f = model.hyperparams().kernel.signal_std();
  const double ell = model.hyperparams().kernel.lengthscale;
  const bool constrained = region.gamma < 1.0;
  const double limit = constrained ? region.sigma_threshold() : 0.0;
  const double active_band = 10.0 * cfg.constraint_tol_rel * sigma_f;

  Eigen::VectorXd x = start;
  double fx = ucb(model, x, cfg);
  double step = 0.5 * ell;

  for (int iter = 0; iter < cfg.refine_max_iters; ++iter) {
    const auto [dmean, dstd] = model.predict_gradients(x);
    Eigen::VectorXd grad = dmean + cfg.beta * dstd;

    if (constrained && model.posterior_std(x) >= limit - active_band) {
      // Project onto the tangent plane of the sigma constraint when the
      // gradient points out of the feasible set.
      const Eigen::VectorXd normal = dstd;
      const double nn = normal.squaredNorm();
      if (nn > 1e-24 && grad.dot(normal) > 0.0) {
        grad -= (grad.dot(normal) / nn) * normal;
      }
    }
    // Drop components pushing through active box faces.
    for (int i = 0; i < region.box.dim(); ++i) {
      if ((x[i] <= region.box.lower[i] && grad[i] < 0.0) ||
          (x[i] >= region.box.upper[i] && grad[i] > 0.0)) {
        grad[i] = 0.0;
      }
    }

    const double gnorm = grad.norm();
    if (gnorm < 1e-14) break;
    const Eigen::VectorXd dir = grad / gnorm;

    bool moved = false;
    while (step >= 1e-12) {
      Eigen::VectorXd trial = region.box.clip(x + step * dir);
      if (constrained && !region.contains(trial)) {
        trial = bisect_to_boundary(region, x, trial);
      }
      const double ft = ucb(model, trial, cfg);
      if (ft > fx && (trial - x).norm() >= 1e-13) {
        x = trial;
        fx = ft;
        step = std::min(step * 1.3, 0.5 * ell);
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return x;
}

// Levenberg-Marquardt root solve of the first-order optimality system at
// a fixed active set: for the free coordinates, grad alpha = lambda *
// grad sigma (lambda = 0 when the sigma constraint is inactive), plus
// sigma = limit when it is active. Returns the final residual norm;
// updates x (and lambda) in place. Gradients are analytic; the Jacobian
// is a central finite difference of them.
struct PolishProblem {
  const ConfidenceRegion& region;
  const GpModel& model;
  double beta;
  bool on_boundary;
  double limit;

  std::pair<Eigen::VectorXd, Eigen::VectorXd> grad_pair(
      const Eigen::VectorXd& x) const {
    const auto [dmean, dstd] = model.predict_gradients(x);
    return {dmean + beta * dstd, dstd};
  }

  Eigen::VectorXd residual(const Eigen::VectorXd& x, double lam,
                           const std::vector<int>& free_idx) const {
    const int m = static_cast<int>(free_idx.size());
    Eigen::VectorXd r(on_boundary ? m + 1 : m);
    const auto [ga, gs] = grad_pair(x);
    for (int k = 0; k < m; ++k) {
      r[k] = ga[free_idx[k]] - (on_boundary ? lam * gs[free_idx[k]] : 0.0);
    }
    if (on_boundary) r[m] = model.posterior_std(x) - limit;
    return r;
  }
};

double lm_solve(const PolishProblem& prob, const std::vector<int>& free_idx,
                Eigen::VectorXd& x, double& lambda) {
  const int d = static_cast<int>(x.size());
  const int m = static_cast<int>(free_idx.size());
  const int n_eq = prob.on_boundary ? m + 1 : m;
  const double ell = prob.model.hyperparams().kernel.lengthscale;
  const double sigma_f = prob.model.hyperparams().kernel.signal_std();
  const double fd_h = 1e-6 * ell;
  const double r_tol = 1e-12 * sigma_f / ell;

  Eigen::VectorXd r = prob.residual(x, lambda, free_idx);
  double mu = 1e-3;
  for (int iter = 0; iter < 60 && r.norm() >= r_tol && mu < 1e10; ++iter) {
    Eigen::MatrixXd jac(n_eq, n_eq);
    for (int k = 0; k < m; ++k) {
      Eigen::VectorXd xp = x, xm = x;
      xp[free_idx[k]] += fd_h;
      xm[free_idx[k]] -= fd_h;
      jac.col(k) = (prob.residual(xp, lambda, free_idx) -
                    prob.residual(xm, lambda, free_idx)) /
                   (2 * fd_h);
    }
    if (prob.on_boundary) {
      const Eigen::VectorXd gs = prob.grad_pair(x).second;
      for (int k = 0; k < m; ++k) jac(k, m) = -gs[free_idx[k]];
      jac(m, m) = 0.0;
    }

    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    const Eigen::VectorXd diag =
        jtj.diagonal().cwiseMax(1e-12 * jtj.diagonal().maxCoeff());

    bool progressed = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += mu * diag;
      Eigen::VectorXd dz = a.ldlt().solve(-jtr);

      Eigen::VectorXd dx = Eigen::VectorXd::Zero(d);
      for (int k = 0; k < m; ++k) dx[free_idx[k]] = dz[k];
      const double max_step = 0.1 * ell;
      if (dx.norm() > max_step) dz *= max_step / dx.norm();

      Eigen::VectorXd x_new = x;
      for (int k = 0; k < m; ++k) x_new[free_idx[k]] += dz[k];
      const double lam_new =
          prob.on_boundary ? std::max(lambda + dz[m], 0.0) : 0.0;
      if (!prob.region.box.contains(x_new)) {
        mu *= 10.0;
        continue;
      }
      const Eigen::VectorXd r_new = prob.residual(x_new, lam_new, free_idx);
      if (r_new.norm() < r.norm()) {
        x = x_new;
        lambda = lam_new;
        r = r_new;
        mu = std::max(mu / 3.0, 1e-12);
        progressed = true;
        break;
      }
      mu *= 10.0;
    }
    if (!progressed) break;
  }
  return r.norm();
}

// Polish of the refined point on the first-order optimality conditions:
// interior stationarity (grad alpha = 0) or, with the sigma constraint
// active, grad alpha = lambda * grad sigma on sigma = limit. Box faces
// are handled by an active-set loop: if the root solve stalls with a
// nonzero residual (a least-squares point, meaning no root exists with
// the current free coordinates), the free coordinate closest to a box
// face is pinned to that face and the reduced system is re-solved. All
// decisions are made on residual norms and well-separated distances, not
// acquisition-value comparisons, so the output is reproducible under
// last-bit perturbations of the training data. Returns x0 unchanged when
// no root is found.
Eigen::VectorXd optimality_polish(const ConfidenceRegion& region,
                                  const GpModel& model,
                                  const Eigen::VectorXd& x0,
                                  const AcquisitionConfig& cfg) {
  const int d = static_cast<int>(x0.size());
  const double sigma_f = model.hyperparams().kernel.signal_std();
  const double ell = model.hyperparams().kernel.lengthscale;
  const bool constrained = region.gamma < 1.0;
  const double limit = constrained ? region.sigma_threshold() : 0.0;
  const double active_band = 10.0 * cfg.constraint_tol_rel * sigma_f;

  PolishProblem prob{region, model, cfg.beta,
                     constrained &&
                         model.posterior_std(x0) >= limit - active_band,
                     limit};
  double lambda = 0.0;
  if (prob.on_boundary) {
    const auto [ga0, gs0] = prob.grad_pair(x0);
    const double nn = gs0.squaredNorm();
    if (nn > 1e-24) lambda = ga0.dot(gs0) / nn;
    if (lambda <= 0.0) prob.on_boundary = false;  // constraint not binding
  }

  std::vector<int> free_idx;
  for (int i = 0; i < d; ++i) {
    if (x0[i] > region.box.lower[i] && x0[i] < region.box.upper[i]) {
      free_idx.push_back(i);
    }
  }

  const double r_accept = 1e-9 * sigma_f / ell;
  Eigen::VectorXd x = x0;
  while (!free_idx.empty()) {
    const double rnorm = lm_solve(prob, free_idx, x, lambda);
    if (rnorm < r_accept) return x;

    // Stalled at a least-squares point: a box-face multiplier is likely
    // missing. Pin the free coordinate nearest a face and re-solve.
    int pin = -1;
    double pin_dist = 0.05 * ell;  // only pin genuinely face-adjacent coords
    double pin_value = 0.0;
    for (std::size_t k = 0; k < free_idx.size(); ++k) {
      const int i = free_idx[k];
      const double dlo = x[i] - region.box.lower[i];
      const double dhi = region.box.upper[i] - x[i];
      const double dist = std::min(dlo, dhi);
      if (dist < pin_dist) {
        pin_dist = dist;
        pin = static_cast<int>(k);
        pin_value =
            dlo <= dhi ? region.box.lower[i] : region.box.upper[i];
      }
    }
    if (pin < 0) break;  // no nearby face: give up on polishing
    x[free_idx[pin]] = pin_value;
    free_idx.erase(free_idx.begin() + pin);
  }
  return x0;
}

}  // namespace

Eigen::VectorXd propose(const ConfidenceRegion& region, const GpModel& model,
                        const std::vector<Eigen::VectorXd>& samples,
                        const AcquisitionConfig& cfg) {
  if (samples.empty()) {
    throw std::invalid_argument("propose: empty sample list");
  }

  std::size_t best_idx = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double v = ucb(model, samples[i], cfg);
    if (v > best_val) {
      best_val = v;
      best_idx = i;
    }
  }
  const Eigen::VectorXd& best_sample = samples[best_idx];

  const double ctol =
      cfg.constraint_tol_rel * model.hyperparams().kernel.signal_std();
  const Eigen::VectorXd refined = refine(region, model, best_sample, cfg);
  const Eigen::VectorXd polished = optimality_polish(region, model, refined, cfg);
  if (region.contains(polished, ctol) &&
      ucb(model, polished, cfg) >= best_val) {
    return polished;
  }
  if (region.contains(refined, ctol) &&
      ucb(model, refined, cfg) >= best_val) {
    return refined;
  }
  return best_sample;
}

}  // namespace crbo
