// Command-line front end: configure and execute benchmark experiments,
// aggregate persisted run records, and run quick self-checks.

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crbo/benchmarks.hpp"
#include "crbo/experiment.hpp"

namespace {

int cmd_run(const std::string& config_path,
            const std::vector<std::string>& set_method,
            const crbo::ExperimentConfig& overrides,
            const std::vector<bool>& present) {
  crbo::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = crbo::load_config(config_path);
    // Flag overrides, in the order of the `present` mask below.
    if (present[0]) cfg.method = overrides.method;
    if (present[1]) cfg.suite = overrides.suite;
    if (present[2]) cfg.gammas = overrides.gammas;
    if (present[3]) cfg.budget = overrides.budget;
    if (present[4]) cfg.repetitions = overrides.repetitions;
    if (present[5]) cfg.realizations = overrides.realizations;
    if (present[6]) cfg.seed = overrides.seed;
    if (present[7]) cfg.output_dir = overrides.output_dir;
    if (present[8]) cfg.workers = overrides.workers;
    if (present[9]) cfg.samples = overrides.samples;
    if (present[10]) cfg.beta = overrides.beta;
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return 2;
  }
  (void)set_method;
  try {
    return crbo::run_experiment(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 1;
  }
}

bool check(const char* name, bool ok) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
  return ok;
}

int cmd_verify() {
  using namespace crbo;
  bool all = true;
  RandomStream rng(7);

  // r0 closed form against the bisection route.
  {
    bool ok = true;
    for (int i = 0; i < 20; ++i) {
      KernelSpec spec{KernelFamily::SquaredExponential, 1.0,
                      rng.uniform(0.05, 1.0)};
      const double gamma = rng.uniform(0.05, 0.95);
      const double closed = compute_r0(spec, gamma, 0.0);
      const double numeric = compute_r0(spec, gamma, 1e-9);
      ok = ok && std::abs(closed - numeric) <= 1e-6 * closed;
    }
    all &= check("r0 closed form matches bisection", ok);
  }

  // Analytic gradients against central finite differences.
  {
    bool ok = true;
    for (int trial = 0; trial < 10 && ok; ++trial) {
      Dataset data;
      for (int i = 0; i < 6; ++i) {
        Eigen::VectorXd p(2);
        p << rng.uniform(-1, 1), rng.uniform(-1, 1);
        data.append(p, rng.normal());
      }
      GpHyperparams hp;
      hp.kernel.lengthscale = 0.5;
      hp.noise_variance = 1e-4;
      const GpModel model = GpModel::fit(data, hp);
      Eigen::VectorXd q(2);
      q << rng.uniform(-1, 1), rng.uniform(-1, 1);
      const auto [dmean, dstd] = model.predict_gradients(q);
      const double h = 1e-6;
      for (int j = 0; j < 2; ++j) {
        Eigen::VectorXd qp = q, qm = q;
        qp[j] += h;
        qm[j] -= h;
        const double fd_mean =
            (model.predict(qp).first - model.predict(qm).first) / (2 * h);
        const double fd_std =
            (model.posterior_std(qp) - model.posterior_std(qm)) / (2 * h);
        ok = ok && std::abs(dmean[j] - fd_mean) <=
                       1e-5 * std::max(1.0, std::abs(fd_mean));
        ok = ok && std::abs(dstd[j] - fd_std) <=
                       1e-5 * std::max(1.0, std::abs(fd_std));
      }
    }
    all &= check("analytic gradients match finite differences", ok);
  }

  // Every Hit-and-Run sample satisfies membership.
  {
    Dataset data;
    Eigen::VectorXd a(2), b(2);
    a << -0.3, 0.0;
    b << 0.4, 0.2;
    data.append(a, 0.5);
    data.append(b, 0.7);
    GpHyperparams hp;
    hp.kernel.lengthscale = 0.3;
    hp.noise_variance = 1e-6;
    const GpModel model = GpModel::fit(data, hp);
    const ConfidenceRegion region{0.7, &model, Box::centered(2, 1.0)};
    const auto samples = sample_region(region, data, SamplerConfig{500}, 11);
    bool ok = samples.size() == 500;
    const double tol = 1e-6 * model.hyperparams().kernel.signal_std();
    for (const auto& s : samples) ok = ok && region.contains(s, tol);
    all &= check("Hit-and-Run samples stay inside the region", ok);
  }

  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Confidence-region Bayesian optimization benchmark driver"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Execute a benchmark experiment");
  std::string config_path;
  crbo::ExperimentConfig over;
  std::vector<bool> present(11, false);
  run->add_option("--config", config_path, "JSON config file");
  auto mark = [&present](int i) {
    return [&present, i](const std::string&) { present[i] = true; };
  };
  run->add_option("--method", over.method, "crbo | standard_bo")
      ->each(mark(0));
  run->add_option("--suite", over.suite, "gp2d | gp5d | pendulum")
      ->each(mark(1));
  run->add_option("--gamma", over.gammas,
                  "confidence parameter(s) in (0,1]; repeat to sweep")
      ->each(mark(2));
  run->add_option("--budget", over.budget, "total evaluations per run")
      ->each(mark(3));
  run->add_option("--reps", over.repetitions, "repetitions per realization")
      ->each(mark(4));
  run->add_option("--realizations", over.realizations,
                  "number of objective realizations")
      ->each(mark(5));
  run->add_option("--seed", over.seed, "base seed")->each(mark(6));
  run->add_option("--output,-o", over.output_dir, "output directory")
      ->each(mark(7));
  run->add_option("--workers", over.workers,
                  "worker threads (0 = logical cores)")
      ->each(mark(8));
  run->add_option("--samples", over.samples, "sampler budget K per iteration")
      ->each(mark(9));
  run->add_option("--beta", over.beta, "UCB exploration weight")
      ->each(mark(10));

  auto* report = app.add_subcommand(
      "report", "Aggregate run records into delimited tables");
  std::string results_dir;
  report->add_option("results_dir", results_dir, "directory of RunRecords")
      ->required();

  app.add_subcommand("verify", "Run quick property self-checks");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    return cmd_run(config_path, {}, over, present);
  }
  if (report->parsed()) {
    return crbo::write_report(results_dir, std::cout);
  }
  return cmd_verify();
}
