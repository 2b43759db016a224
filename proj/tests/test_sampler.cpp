#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "crbo/sampler.hpp"

using namespace crbo;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

struct BallSetup {
  Dataset data;
  GpModel model;
  double r0;
};

// Single-point SE model whose gamma-region is a ball of known radius.
BallSetup one_ball(double ell, double gamma) {
  Dataset data;
  data.append(vec2(0.0, 0.0), 0.5);
  GpHyperparams hp;
  hp.kernel.family = KernelFamily::SquaredExponential;
  hp.kernel.lengthscale = ell;
  hp.noise_variance = 0.0;
  GpModel model = GpModel::fit(data, hp);
  const double r0 = compute_r0(hp.kernel, gamma, 0.0);
  return {std::move(data), std::move(model), r0};
}

// One-sided Kolmogorov-Smirnov distance of sorted u in [0,1] against the
// uniform CDF.
double ks_distance(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double cdf = u[i];
    d = std::max(d, std::abs((i + 1) / n - cdf));
    d = std::max(d, std::abs(i / n - cdf));
  }
  return d;
}

}  // namespace

TEST_CASE("every sample satisfies membership") {
  Dataset data;
  data.append(vec2(-0.3, 0.1), 0.2);
  data.append(vec2(0.4, -0.2), 0.6);
  GpHyperparams hp;
  hp.kernel.lengthscale = 0.3;
  hp.noise_variance = 1e-6;
  const GpModel model = GpModel::fit(data, hp);
  const ConfidenceRegion region{0.7, &model, Box::centered(2, 1.0)};

  const auto samples = sample_region(region, data, SamplerConfig{1000}, 5);
  REQUIRE(samples.size() == 1000);
  const double tol = 1e-6 * model.hyperparams().kernel.signal_std();
  for (const auto& s : samples) CHECK(region.contains(s, tol));
}

TEST_CASE("single-ball samples stay within r0") {
  auto setup = one_ball(0.3, 0.6);
  const ConfidenceRegion region{0.6, &setup.model, Box::centered(2, 1.0)};
  const auto samples =
      sample_region(region, setup.data, SamplerConfig{2000}, 17);
  for (const auto& s : samples) CHECK(s.norm() <= setup.r0 + 1e-6);
}

TEST_CASE("determinism: identical seed gives identical samples") {
  auto setup = one_ball(0.3, 0.7);
  const ConfidenceRegion region{0.7, &setup.model, Box::centered(2, 1.0)};
  const auto a = sample_region(region, setup.data, SamplerConfig{500}, 99);
  const auto b = sample_region(region, setup.data, SamplerConfig{500}, 99);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  const auto c = sample_region(region, setup.data, SamplerConfig{500}, 100);
  bool any_diff = false;
  for (std::size_t i = 0; i < c.size(); ++i) any_diff |= (a[i] != c[i]);
  CHECK(any_diff);
}

TEST_CASE("gamma=1 region: empirical box means near the center") {
  Dataset data;
  data.append(vec2(0.2, 0.7), 0.0);  // seed point anywhere in the box
  GpHyperparams hp;
  const GpModel model = GpModel::fit(data, hp);
  Eigen::VectorXd lo(2), hi(2);
  lo << 0.0, 0.0;
  hi << 1.0, 1.0;
  const ConfidenceRegion region{1.0, &model, Box(lo, hi)};

  const auto samples =
      sample_region(region, data, SamplerConfig{10000}, 123);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  CHECK(std::abs(mean[0] - 0.5) < 0.02);
  CHECK(std::abs(mean[1] - 0.5) < 0.02);
}

TEST_CASE("uniformity on a disk: radial law and moments") {
  auto setup = one_ball(0.3, 0.6);
  const ConfidenceRegion region{0.6, &setup.model, Box::centered(2, 1.0)};

  SUBCASE("Kolmogorov-Smirnov on the r^2 law, 5000 samples, alpha=0.01") {
    const auto samples =
        sample_region(region, setup.data, SamplerConfig{5000}, 7);
    // For a uniform disk of radius R, (r/R)^2 is uniform on [0,1].
    std::vector<double> u;
    u.reserve(samples.size());
    for (const auto& s : samples) {
      const double r = s.norm() / setup.r0;
      u.push_back(r * r);
    }
    const double d_crit = 1.628 / std::sqrt(5000.0);
    CHECK(ks_distance(std::move(u)) < d_crit);
  }

  SUBCASE("first and second moments within 3 standard errors") {
    const int n = 10000;
    const auto samples =
        sample_region(region, setup.data, SamplerConfig{n}, 31);
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    double r2 = 0.0;
    for (const auto& s : samples) {
      mean += s;
      r2 += s.squaredNorm();
    }
    mean /= n;
    r2 /= n;
    // Uniform disk: E[x] = 0 with per-coordinate var R^2/4;
    // E[r^2] = R^2/2 with var(r^2) = R^4/12.
    const double R = setup.r0;
    const double se_mean = std::sqrt(R * R / 4.0 / n);
    CHECK(std::abs(mean[0]) < 3 * se_mean);
    CHECK(std::abs(mean[1]) < 3 * se_mean);
    const double se_r2 = std::sqrt(R * R * R * R / 12.0 / n);
    CHECK(std::abs(r2 - R * R / 2.0) < 3 * se_r2);
  }
}

TEST_CASE("two well-separated balls both receive samples") {
  Dataset data;
  data.append(vec2(-0.7, 0.0), 0.1);
  data.append(vec2(0.7, 0.0), 0.1);
  GpHyperparams hp;
  hp.kernel.family = KernelFamily::SquaredExponential;
  hp.kernel.lengthscale = 0.2;
  hp.noise_variance = 0.0;
  const GpModel model = GpModel::fit(data, hp);
  const ConfidenceRegion region{0.6, &model, Box::centered(2, 1.0)};

  const int K = 2000;
  const auto samples = sample_region(region, data, SamplerConfig{K}, 77);
  int left = 0, right = 0;
  for (const auto& s : samples) (s[0] < 0 ? left : right)++;
  CHECK(left >= K / 5);
  CHECK(right >= K / 5);
}

TEST_CASE("chain contribution counts are floor/ceil of K/n") {
  Dataset data;
  data.append(vec2(-0.3, 0.0), 0.1);
  data.append(vec2(0.0, 0.3), 0.2);
  data.append(vec2(0.3, 0.0), 0.3);
  GpHyperparams hp;
  hp.kernel.lengthscale = 0.4;
  hp.noise_variance = 1e-6;
  const GpModel model = GpModel::fit(data, hp);
  const ConfidenceRegion region{0.9, &model, Box::centered(2, 1.0)};

  // K = 1000, n = 3 -> 334 + 333 + 333.
  const auto samples = sample_region(region, data, SamplerConfig{1000}, 3);
  CHECK(samples.size() == 1000);

  // Verify the split by reproducing each chain independently.
  for (int K : {1000, 999}) {
    const auto pooled = sample_region(region, data, SamplerConfig{K}, 3);
    const int n = data.size();
    const int base = K / n;
    int offset = 0;
    for (int c = 0; c < n; ++c) {
      const int quota = base + (c < K % n ? 1 : 0);
      ChainState chain(data.points.row(c).transpose(),
                       mix_seed(3, static_cast<std::uint64_t>(c)));
      for (int s = 0; s < quota; ++s) {
        hit_and_run_step(region, chain);
        CHECK(pooled[offset + s] == chain.current);
      }
      offset += quota;
    }
    CHECK(offset == K);
  }
}

TEST_CASE("step from a box face never leaves the box") {
  Dataset data;
  data.append(vec2(1.0, 0.0), 0.1);  // on the box boundary
  GpHyperparams hp;
  hp.kernel.lengthscale = 0.3;
  const GpModel model = GpModel::fit(data, hp);
  const Box box = Box::centered(2, 1.0);
  const ConfidenceRegion region{0.8, &model, box};

  ChainState chain(vec2(1.0, 0.0), 42);
  for (int t = 0; t < 200; ++t) {
    hit_and_run_step(region, chain);
    CHECK(box.contains(chain.current, 1e-12));
    CHECK(region.contains(chain.current, 1e-6));
  }
}

TEST_CASE("initial design geometry") {
  RandomStream rng(64);

  SUBCASE("points sit at the exact radius before clipping") {
    const Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(3);
    // Wide box so clipping is a no-op.
    const auto design =
        initial_design(theta0, 0.25, 8, Box::centered(3, 10.0), rng);
    REQUIRE(design.size() == 8);
    for (const auto& p : design) {
      CHECK(std::abs(p.norm() - 0.25) < 1e-10);
    }
  }

  SUBCASE("clipping keeps every point inside the box") {
    Eigen::VectorXd corner(2);
    corner << 0.95, 0.95;
    const Box box = Box::centered(2, 1.0);
    const auto design = initial_design(corner, 0.3, 20, box, rng);
    REQUIRE(design.size() == 20);
    for (const auto& p : design) CHECK(box.contains(p, 1e-12));
  }

  SUBCASE("d=5 sphere mean concentrates at the center") {
    const Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(5);
    const auto design =
        initial_design(theta0, 0.5, 10000, Box::centered(5, 10.0), rng);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(5);
    for (const auto& p : design) mean += p;
    mean /= static_cast<double>(design.size());
    for (int j = 0; j < 5; ++j) CHECK(std::abs(mean[j]) < 0.02);
  }
}

TEST_CASE("random_unit_vector has unit norm") {
  RandomStream rng(13);
  for (int d : {1, 2, 5, 12}) {
    for (int t = 0; t < 20; ++t) {
      CHECK(random_unit_vector(d, rng).norm() ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}
