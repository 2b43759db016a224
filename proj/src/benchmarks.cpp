#include "crbo/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crbo {

namespace {

constexpr std::uint64_t kRealizationStream = 0x7265616c;
constexpr std::uint64_t kNoiseStream = 0x6e6f6973;
constexpr std::uint64_t kProbeStream = 0x70726f62;
constexpr double kCacheJitter = 1e-10;

}  // namespace

GpSampleObjective::GpSampleObjective(const Config& cfg,
                                     std::uint64_t realization_seed)
    : cfg_(cfg),
      seed_(realization_seed),
      realization_rng_(mix_seed(realization_seed, kRealizationStream)),
      noise_rng_(mix_seed(realization_seed, kNoiseStream)) {
  // Condition the prior on the center point so the optimum stays away
  // from the domain boundary.
  ensure_capacity(1);
  const Eigen::VectorXd center = Eigen::VectorXd::Zero(cfg_.dim);
  const double k0 = cfg_.signal_variance;
  points_.row(0) = center.transpose();
  values_[0] = cfg_.center_value;
  chol_(0, 0) = std::sqrt(k0 + kCacheJitter * cfg_.signal_variance);
  n_ = 1;
}

void GpSampleObjective::ensure_capacity(int needed) {
  const int cap = static_cast<int>(points_.rows());
  if (needed <= cap) return;
  const int new_cap = std::max(needed, std::max(64, 2 * cap));
  points_.conservativeResize(new_cap, cfg_.dim);
  values_.conservativeResize(new_cap);
  Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(new_cap, new_cap);
  if (cap > 0) grown.topLeftCorner(cap, cap) = chol_;
  chol_ = std::move(grown);
}

void GpSampleObjective::append(const Eigen::VectorXd& q, double value,
                               const Eigen::VectorXd& w, double cond_var) {
  ensure_capacity(n_ + 1);
  points_.row(n_) = q.transpose();
  values_[n_] = value;
  chol_.row(n_).head(n_) = w.transpose();
  chol_(n_, n_) = std::sqrt(cond_var);
  ++n_;
}

Eigen::VectorXd GpSampleObjective::mean_coefficients() const {
  const auto lower = chol_.topLeftCorner(n_, n_);
  const Eigen::VectorXd z =
      lower.triangularView<Eigen::Lower>().solve(values_.head(n_));
  return lower.transpose().triangularView<Eigen::Upper>().solve(z);
}

double GpSampleObjective::noiseless(const Eigen::VectorXd& theta) {
  if (theta.size() != cfg_.dim) {
    throw std::invalid_argument("GpSampleObjective: dimension mismatch");
  }
  KernelSpec spec{cfg_.family, cfg_.signal_variance, cfg_.lengthscale};

  for (int i = 0; i < n_; ++i) {
    if ((theta.transpose() - points_.row(i)).lpNorm<Eigen::Infinity>() <
        1e-12) {
      return values_[i];
    }
  }

  Eigen::VectorXd k(n_);
  for (int i = 0; i < n_; ++i) {
    k[i] = kernel_value(spec, (theta.transpose() - points_.row(i)).norm());
  }
  const auto lower = chol_.topLeftCorner(n_, n_);
  const Eigen::VectorXd w = lower.triangularView<Eigen::Lower>().solve(k);
  const Eigen::VectorXd z =
      lower.triangularView<Eigen::Lower>().solve(values_.head(n_));
  const double mean = w.dot(z);

  const double jitter = kCacheJitter * cfg_.signal_variance;
  const double cond_diag = cfg_.signal_variance + jitter - w.squaredNorm();
  if (cond_diag <= 2.0 * jitter) {
    // Numerically pinned by nearby cache points; no new information.
    return mean;
  }
  const double sample_std =
      std::sqrt(std::max(cfg_.signal_variance - w.squaredNorm(), 0.0));
  const double value = mean + sample_std * realization_rng_.normal();
  append(theta, value, w, cond_diag);
  return value;
}

double GpSampleObjective::evaluate(const Eigen::VectorXd& theta) {
  return noiseless(theta) + cfg_.noise_std * noise_rng_.normal();
}

std::optional<double> GpSampleObjective::optimum() const { return y_star_; }

const Eigen::VectorXd& GpSampleObjective::arg_optimum() const {
  if (!y_star_) {
    throw std::logic_error("GpSampleObjective: optimum not computed yet");
  }
  return theta_star_;
}

void GpSampleObjective::find_optimum(int n_probes) {
  if (y_star_) return;
  const Box box = domain();
  RandomStream probe_rng(mix_seed(seed_, kProbeStream));

  std::vector<Eigen::VectorXd> starts;
  starts.reserve(n_probes + 1);
  starts.push_back(Eigen::VectorXd::Zero(cfg_.dim));
  for (int i = 0; i < n_probes; ++i) {
    Eigen::VectorXd q(cfg_.dim);
    for (int j = 0; j < cfg_.dim; ++j) q[j] = probe_rng.uniform(-1.0, 1.0);
    noiseless(q);
    starts.push_back(std::move(q));
  }

  // Multi-start gradient ascent on the posterior mean of the realized
  // cache; only the best termini are realized as new conditioning points.
  KernelSpec spec{cfg_.family, cfg_.signal_variance, cfg_.lengthscale};
  const Eigen::VectorXd coef = mean_coefficients();
  const int n_fixed = n_;
  auto mean_at = [&](const Eigen::VectorXd& q) {
    double m = 0.0;
    for (int i = 0; i < n_fixed; ++i) {
      m += coef[i] *
           kernel_value(spec, (q.transpose() - points_.row(i)).norm());
    }
    return m;
  };
  auto grad_at = [&](const Eigen::VectorXd& q) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(cfg_.dim);
    for (int i = 0; i < n_fixed; ++i) {
      const Eigen::VectorXd diff = q.transpose() - points_.row(i);
      g += coef[i] * kernel_radial_slope(spec, diff.norm()) * diff;
    }
    return g;
  };

  std::vector<std::pair<double, Eigen::VectorXd>> termini;
  termini.reserve(starts.size());
  for (const auto& start : starts) {
    Eigen::VectorXd x = start;
    double fx = mean_at(x);
    double step = 0.1 * cfg_.lengthscale;
    for (int iter = 0; iter < 100; ++iter) {
      Eigen::VectorXd g = grad_at(x);
      for (int j = 0; j < cfg_.dim; ++j) {
        if ((x[j] <= box.lower[j] && g[j] < 0.0) ||
            (x[j] >= box.upper[j] && g[j] > 0.0)) {
          g[j] = 0.0;
        }
      }
      const double gnorm = g.norm();
      if (gnorm < 1e-8) break;
      bool moved = false;
      while (step >= 1e-10) {
        const Eigen::VectorXd trial = box.clip(x + (step / gnorm) * g);
        const double ft = mean_at(trial);
        if (ft > fx) {
          x = trial;
          fx = ft;
          step = std::min(step * 1.3, 0.5 * cfg_.lengthscale);
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    termini.emplace_back(fx, x);
  }
  std::sort(termini.begin(), termini.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  const int n_realize = std::min<std::size_t>(5, termini.size());
  for (int i = 0; i < n_realize; ++i) {
    noiseless(termini[i].second);
  }

  int best = 0;
  for (int i = 1; i < n_; ++i) {
    if (values_[i] > values_[best]) best = i;
  }
  y_star_ = values_[best];
  theta_star_ = points_.row(best).transpose();
}

std::vector<std::shared_ptr<GpSampleObjective>> make_gp_sample_suite(
    int d, int count, std::uint64_t seed) {
  std::vector<std::shared_ptr<GpSampleObjective>> suite;
  suite.reserve(count);
  for (int i = 0; i < count; ++i) {
    GpSampleObjective::Config cfg;
    cfg.dim = d;
    auto obj = std::make_shared<GpSampleObjective>(
        cfg, mix_seed(seed, static_cast<std::uint64_t>(i)));
    obj->find_optimum();
    suite.push_back(std::move(obj));
  }
  return suite;
}

Eigen::VectorXd sample_initial_point(const GpSampleObjective& obj,
                                     double distance, std::uint64_t seed) {
  if (distance < 0.0) {
    throw std::invalid_argument("sample_initial_point: negative distance");
  }
  const Eigen::VectorXd& theta_star = obj.arg_optimum();
  const Box box = obj.domain();
  RandomStream rng(seed);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const Eigen::VectorXd p =
        theta_star +
        distance * random_unit_vector(static_cast<int>(theta_star.size()), rng);
    if (box.contains(p)) return p;
  }
  throw std::invalid_argument(
      "sample_initial_point: sphere does not intersect the domain");
}

ToyPendulumObjective::ToyPendulumObjective(const Config& cfg,
                                           std::uint64_t noise_seed)
    : cfg_(cfg), noise_rng_(mix_seed(noise_seed, kNoiseStream)) {}

Box ToyPendulumObjective::domain() const {
  Eigen::VectorXd lo(2), hi(2);
  lo << 0.0, 0.0;
  hi << 30.0, 10.0;
  return Box(lo, hi);
}

double ToyPendulumObjective::episode_return(const Eigen::VectorXd& theta,
                                            double initial_angle) const {
  if (theta.size() != 2) {
    throw std::invalid_argument("ToyPendulumObjective: theta must be 2-D");
  }
  const double inertia = cfg_.mass * cfg_.length * cfg_.length;
  double angle = initial_angle;  // 0 = upright
  double rate = 0.0;
  double total = 0.0;
  for (int t = 0; t < cfg_.horizon; ++t) {
    double action = -(theta[0] * angle + theta[1] * rate);
    action = std::clamp(action, -cfg_.torque_limit, cfg_.torque_limit);
    const double upright =
        1.0 - std::min(std::abs(angle), M_PI) / M_PI;
    total += (upright - 0.001 * action * action) / cfg_.horizon;
    const double accel =
        (cfg_.gravity / cfg_.length) * std::sin(angle) + action / inertia;
    rate += cfg_.dt * accel;
    angle += cfg_.dt * rate;
  }
  return total;
}

double ToyPendulumObjective::evaluate(const Eigen::VectorXd& theta) {
  const double phi0 =
      cfg_.init_angle + cfg_.init_jitter * noise_rng_.normal();
  return episode_return(theta, phi0);
}

}  // namespace crbo
