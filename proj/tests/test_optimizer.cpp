#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "crbo/optimizer.hpp"
#include "crbo/rng.hpp"

using namespace crbo;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

// Smooth deterministic bowl with a tiny seeded noise stream.
class QuadraticObjective : public Objective {
 public:
  explicit QuadraticObjective(std::uint64_t seed, double noise_std = 1e-4)
      : rng_(seed), noise_std_(noise_std) {}

  int dim() const override { return 2; }
  Box domain() const override { return Box::centered(2, 1.0); }
  double evaluate(const Eigen::VectorXd& theta) override {
    const double clean = 1.0 - (theta - center()).squaredNorm();
    return clean + noise_std_ * rng_.normal();
  }
  std::optional<double> optimum() const override { return 1.0; }
  static Eigen::VectorXd center() { return vec2(0.3, -0.2); }

 private:
  RandomStream rng_;
  double noise_std_;
};

class ThrowingObjective : public Objective {
 public:
  explicit ThrowingObjective(int fail_at) : fail_at_(fail_at) {}
  int dim() const override { return 2; }
  Box domain() const override { return Box::centered(2, 1.0); }
  double evaluate(const Eigen::VectorXd& theta) override {
    if (++count_ >= fail_at_) throw std::runtime_error("sensor offline");
    return -theta.squaredNorm();
  }

 private:
  int fail_at_;
  int count_ = 0;
};

CrboConfig small_config(std::uint64_t seed, int budget) {
  CrboConfig cfg;
  cfg.gamma = 0.6;
  cfg.budget = budget;
  cfg.sampler.total_samples = 200;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("center_values") {
  Dataset data;
  data.append(vec2(0, 0), 1.2);
  data.append(vec2(0.1, 0), 0.5);
  data.append(vec2(0.2, 0), 0.9);
  const auto [centered, offset] = center_values(data);
  CHECK(offset == doctest::Approx(1.2));
  CHECK(centered.values[0] == doctest::Approx(0.0));
  CHECK(centered.values[1] == doctest::Approx(-0.7));
  CHECK(centered.values[2] == doctest::Approx(-0.3));
  CHECK(centered.values.maxCoeff() == doctest::Approx(0.0));

  Dataset single;
  single.append(vec2(0, 0), 4.2);
  const auto [c1, o1] = center_values(single);
  CHECK(o1 == doctest::Approx(4.2));
  CHECK(c1.values[0] == doctest::Approx(0.0));

  Dataset empty;
  CHECK_THROWS_AS(center_values(empty), std::invalid_argument);
}

TEST_CASE("simple_regret") {
  const auto curve = simple_regret({1.2, 0.5, 0.9}, 0.4);
  REQUIRE(curve.size() == 3);
  CHECK(curve[0] == doctest::Approx(0.8));
  CHECK(curve[1] == doctest::Approx(0.1));
  CHECK(curve[2] == doctest::Approx(0.1));

  SUBCASE("first observation at the optimum gives an all-zero curve") {
    for (const double s : simple_regret({0.4, 1.0, -2.0}, 0.4)) {
      CHECK(s == doctest::Approx(0.0));
    }
  }

  SUBCASE("nonincreasing on random inputs") {
    RandomStream rng(5);
    std::vector<double> obs;
    for (int i = 0; i < 100; ++i) obs.push_back(rng.normal());
    const auto s = simple_regret(obs, 0.7);
    for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] <= s[i - 1]);
  }

  SUBCASE("permuting a prefix leaves the value at its end unchanged") {
    std::vector<double> obs = {0.3, 1.1, -0.4, 0.9, 0.2};
    std::vector<double> perm = {1.1, -0.4, 0.3, 0.9, 0.2};
    CHECK(simple_regret(obs, 0.5)[2] ==
          doctest::Approx(simple_regret(perm, 0.5)[2]));
  }
}

TEST_CASE("average_return") {
  const auto curve = average_return({0.2, 0.4, 0.6});
  CHECK(curve[0] == doctest::Approx(0.2));
  CHECK(curve[1] == doctest::Approx(0.3));
  CHECK(curve[2] == doctest::Approx(0.4));

  SUBCASE("constant observations give a constant curve") {
    for (const double r : average_return({0.7, 0.7, 0.7, 0.7})) {
      CHECK(r == doctest::Approx(0.7));
    }
  }

  SUBCASE("matches a brute-force prefix-sum oracle") {
    RandomStream rng(6);
    std::vector<double> obs;
    for (int i = 0; i < 200; ++i) obs.push_back(rng.normal());
    const auto curve2 = average_return(obs);
    for (std::size_t n = 0; n < obs.size(); ++n) {
      double sum = 0.0;
      for (std::size_t i = 0; i <= n; ++i) sum += obs[i];
      CHECK(std::abs(curve2[n] - sum / double(n + 1)) <= 1e-12);
    }
  }
}

TEST_CASE("percentile and aggregate_runs") {
  CHECK(percentile({1, 2, 3}, 0.5) == doctest::Approx(2.0));
  CHECK(percentile({4.0}, 0.25) == doctest::Approx(4.0));

  SUBCASE("matches an independent sort-based recomputation") {
    RandomStream rng(8);
    for (int t = 0; t < 20; ++t) {
      std::vector<double> v;
      const int n = 2 + t;
      for (int i = 0; i < n; ++i) v.push_back(rng.normal());
      for (const double p : {0.25, 0.5, 0.75}) {
        std::vector<double> sorted = v;
        std::sort(sorted.begin(), sorted.end());
        const double h = p * (n - 1);
        const int lo = static_cast<int>(std::floor(h));
        const int hi = static_cast<int>(std::ceil(h));
        const double expect = sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
        CHECK(percentile(v, p) == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }

  SUBCASE("aggregation medians and degenerate IQR") {
    auto make = [](std::vector<double> obs) {
      RunRecord rec;
      rec.budget = static_cast<int>(obs.size());
      rec.observations = obs;
      rec.average_return_curve = average_return(obs);
      rec.simple_regret_curve = simple_regret(obs, 0.0);
      return rec;
    };
    const auto a = make({1.0, 1.0});
    const auto b = make({2.0, 2.0});
    const auto c = make({3.0, 3.0});

    const RunSummary single = aggregate_runs({a});
    CHECK(single.simple_regret.median[0] == doctest::Approx(1.0));
    CHECK(single.simple_regret.q25[0] == doctest::Approx(1.0));
    CHECK(single.simple_regret.q75[0] == doctest::Approx(1.0));

    const RunSummary triple = aggregate_runs({a, b, c});
    CHECK(triple.average_return.median[0] == doctest::Approx(2.0));

    auto mixed = make({1.0, 1.0, 1.0});
    CHECK_THROWS_AS(aggregate_runs({a, mixed}), std::invalid_argument);
  }
}

TEST_CASE("degenerate budget: only theta0 plus the design") {
  QuadraticObjective obj(1);
  CrboConfig cfg = small_config(1, 3);  // n_init = ceil(sqrt 2) = 2
  const RunRecord rec = run_crbo(obj, vec2(0.0, 0.0), cfg);
  CHECK(rec.n_init == 2);
  CHECK(rec.observations.size() == 3);
  CHECK(rec.hyperparam_history.empty());
  CHECK(rec.bound_history.empty());
  CHECK(rec.complete);
  CHECK(rec.proposals[0] == vec2(0.0, 0.0));

  CrboConfig bad = small_config(1, 2);
  CHECK_THROWS_AS(run_crbo(obj, vec2(0.0, 0.0), bad), std::invalid_argument);
}

TEST_CASE("budget exactness and record consistency") {
  QuadraticObjective obj(2);
  const CrboConfig cfg = small_config(2, 12);
  const RunRecord rec = run_crbo(obj, vec2(0.0, 0.0), cfg);
  CHECK(rec.complete);
  CHECK(static_cast<int>(rec.observations.size()) == cfg.budget);
  CHECK(rec.proposals.size() == rec.observations.size());
  CHECK(rec.hyperparam_history.size() ==
        rec.observations.size() - rec.n_init - 1);
  CHECK(rec.bound_history.size() == rec.hyperparam_history.size());
  CHECK(rec.simple_regret_curve.size() == rec.observations.size());
  for (std::size_t i = 1; i < rec.simple_regret_curve.size(); ++i) {
    CHECK(rec.simple_regret_curve[i] <= rec.simple_regret_curve[i - 1]);
  }
}

TEST_CASE("determinism: seed and config fully determine the record") {
  const CrboConfig cfg = small_config(7, 10);
  QuadraticObjective a(7), b(7);
  const RunRecord ra = run_crbo(a, vec2(0.1, 0.1), cfg);
  const RunRecord rb = run_crbo(b, vec2(0.1, 0.1), cfg);
  REQUIRE(ra.observations.size() == rb.observations.size());
  for (std::size_t i = 0; i < ra.observations.size(); ++i) {
    CHECK(ra.observations[i] == rb.observations[i]);
    CHECK(ra.proposals[i] == rb.proposals[i]);
  }

  QuadraticObjective c(7);
  CrboConfig other = cfg;
  other.seed = 8;
  const RunRecord rc = run_crbo(c, vec2(0.1, 0.1), other);
  bool any_diff = false;
  for (std::size_t i = 0; i < rc.proposals.size(); ++i) {
    any_diff |= (ra.proposals[i] != rc.proposals[i]);
  }
  CHECK(any_diff);
}

TEST_CASE("post-hoc constraint compliance from the record") {
  QuadraticObjective obj(3);
  const CrboConfig cfg = small_config(3, 15);
  const RunRecord rec = run_crbo(obj, vec2(0.2, 0.2), cfg);
  REQUIRE(rec.complete);

  const Box box = obj.domain();
  for (std::size_t j = 0; j < rec.hyperparam_history.size(); ++j) {
    const int n = rec.n_init + 1 + static_cast<int>(j);
    Dataset data;
    for (int i = 0; i < n; ++i) {
      data.append(rec.proposals[i], rec.observations[i]);
    }
    const auto [centered, offset] = center_values(data);
    const GpModel model =
        GpModel::fit(centered, rec.hyperparam_history[j], offset);
    const double sf = rec.hyperparam_history[j].kernel.signal_std();
    const Eigen::VectorXd& proposal = rec.proposals[n];
    CHECK(box.contains(proposal, 1e-12));
    CHECK(model.posterior_std(proposal) <= rec.gamma * sf + 1e-6 * sf);
  }
}

TEST_CASE("objective failure yields a flagged partial record") {
  ThrowingObjective obj(5);
  const CrboConfig cfg = small_config(4, 12);
  const RunRecord rec = run_crbo(obj, vec2(0.0, 0.0), cfg);
  CHECK_FALSE(rec.complete);
  CHECK(rec.observations.size() == 4);
  CHECK(rec.proposals.size() == rec.observations.size());
}

TEST_CASE("standard BO shares the pipeline with the constraint disabled") {
  QuadraticObjective obj(9);
  const CrboConfig cfg = small_config(9, 12);
  const RunRecord rec = run_standard_bo(obj, vec2(0.0, 0.0), cfg);
  CHECK(rec.method == "standard_bo");
  CHECK(rec.gamma == doctest::Approx(1.0));
  CHECK(rec.bound_history.empty());
  CHECK(static_cast<int>(rec.observations.size()) == cfg.budget);
  const Box box = obj.domain();
  for (const auto& p : rec.proposals) CHECK(box.contains(p, 1e-12));
}

TEST_CASE("run record JSON round trip") {
  QuadraticObjective obj(11);
  const CrboConfig cfg = small_config(11, 8);
  const RunRecord rec = run_crbo(obj, vec2(0.0, 0.0), cfg);
  const RunRecord back = RunRecord::from_json(rec.to_json());
  CHECK(back.method == rec.method);
  CHECK(back.gamma == rec.gamma);
  CHECK(back.seed == rec.seed);
  REQUIRE(back.proposals.size() == rec.proposals.size());
  for (std::size_t i = 0; i < rec.proposals.size(); ++i) {
    CHECK(back.proposals[i] == rec.proposals[i]);
    CHECK(back.observations[i] == rec.observations[i]);
  }
  REQUIRE(back.hyperparam_history.size() == rec.hyperparam_history.size());
  for (std::size_t j = 0; j < rec.hyperparam_history.size(); ++j) {
    CHECK(back.hyperparam_history[j].kernel.lengthscale ==
          rec.hyperparam_history[j].kernel.lengthscale);
  }
  CHECK(back.bound_history == rec.bound_history);
  CHECK(back.complete == rec.complete);
}
