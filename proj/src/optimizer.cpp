#include "crbo/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace crbo {

namespace {

constexpr std::uint64_t kDesignStream = 0x64657369;   // design rng
constexpr std::uint64_t kAcqStreamBase = 0x61637175;  // per-iteration rng

enum class Method { Crbo, StandardBo };

std::vector<Eigen::VectorXd> uniform_box_samples(const Box& box, int count,
                                                 RandomStream& rng) {
  std::vector<Eigen::VectorXd> samples;
  samples.reserve(count);
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd q(box.dim());
    for (int i = 0; i < box.dim(); ++i) {
      q[i] = rng.uniform(box.lower[i], box.upper[i]);
    }
    samples.push_back(std::move(q));
  }
  return samples;
}

RunRecord run_impl(Objective& obj, const Eigen::VectorXd& theta0,
                   const CrboConfig& cfg, Method method) {
  const Box box = cfg.box.dim() > 0 ? cfg.box : obj.domain();
  const int d = box.dim();
  if (theta0.size() != d || !box.contains(theta0)) {
    throw std::invalid_argument("run: theta0 outside the search domain");
  }
  const int n_init =
      cfg.n_init > 0 ? cfg.n_init
                     : static_cast<int>(std::ceil(std::sqrt(double(d))));
  if (n_init + 1 > cfg.budget) {
    throw std::invalid_argument("run: budget smaller than initial design");
  }

  RunRecord record;
  record.method = method == Method::Crbo ? "crbo" : "standard_bo";
  record.gamma = method == Method::Crbo ? cfg.gamma : 1.0;
  record.n_init = n_init;
  record.budget = cfg.budget;
  record.seed = cfg.seed;

  const GpHyperparams hp0 =
      cfg.init_hyperparams.value_or(cfg.priors.modes(cfg.kernel_family));

  Dataset data;
  auto observe = [&](const Eigen::VectorXd& q) {
    double y = 0.0;
    try {
      y = obj.evaluate(q);
    } catch (...) {
      record.complete = false;
      return false;
    }
    data.append(q, y);
    record.proposals.push_back(q);
    record.observations.push_back(y);
    return true;
  };

  // The design radius is the single-point region radius at the initial
  // hyperparameters; gamma capped below 1 so the radius stays finite for
  // the gamma = 1 / standard-BO pipeline.
  const double design_gamma = std::min(record.gamma, 0.99);
  double design_radius =
      compute_r0(hp0.kernel, design_gamma, hp0.noise_variance);
  if (!(design_radius > 0.0) || !std::isfinite(design_radius)) {
    design_radius = 0.1 * hp0.kernel.lengthscale;
  }

  bool ok = observe(theta0);
  if (ok) {
    RandomStream design_rng(mix_seed(cfg.seed, kDesignStream));
    for (const auto& pt :
         initial_design(theta0, design_radius, n_init, box, design_rng)) {
      if (!(ok = observe(pt))) break;
    }
  }

  GpHyperparams hp = hp0;
  int iter = 0;
  while (ok && data.size() < cfg.budget) {
    const auto t_start = std::chrono::steady_clock::now();

    auto [centered, offset] = center_values(data);
    const MapFitResult map = fit_map(centered, cfg.priors, hp);
    hp = map.hyperparams;
    const GpModel model = GpModel::fit(centered, hp, offset);
    const ConfidenceRegion region{record.gamma, &model, box};

    const std::uint64_t iter_seed =
        mix_seed(cfg.seed, kAcqStreamBase + static_cast<std::uint64_t>(iter));
    std::vector<Eigen::VectorXd> samples;
    if (method == Method::Crbo) {
      samples = sample_region(region, centered, cfg.sampler, iter_seed);
    } else {
      RandomStream rng(iter_seed);
      samples = uniform_box_samples(box, cfg.sampler.total_samples, rng);
    }

    const Eigen::VectorXd proposal =
        propose(region, model, samples, cfg.acquisition);

    if (method == Method::Crbo && record.gamma < 1.0) {
      const double lipschitz = estimate_lipschitz(model, samples);
      record.bound_history.push_back(
          worst_case_bound(region, data, proposal, lipschitz));
    }
    record.hyperparam_history.push_back(hp);
    record.fit_warnings.push_back(!map.converged);

    const auto t_end = std::chrono::steady_clock::now();
    record.wall_time.push_back(
        std::chrono::duration<double>(t_end - t_start).count());

    ok = observe(proposal);
    ++iter;
  }

  record.average_return_curve = average_return(record.observations);
  if (const auto y_star = obj.optimum()) {
    record.simple_regret_curve = simple_regret(record.observations, *y_star);
  }
  return record;
}

}  // namespace

std::pair<Dataset, double> center_values(const Dataset& data) {
  if (data.size() == 0) {
    throw std::invalid_argument("center_values: empty dataset");
  }
  const double offset = data.values.maxCoeff();
  Dataset centered = data;
  centered.values.array() -= offset;
  return {std::move(centered), offset};
}

std::vector<double> simple_regret(const std::vector<double>& observations,
                                  double y_star) {
  if (observations.empty()) {
    throw std::invalid_argument("simple_regret: no observations");
  }
  std::vector<double> curve;
  curve.reserve(observations.size());
  double best = std::numeric_limits<double>::infinity();
  for (const double y : observations) {
    best = std::min(best, std::abs(y - y_star));
    curve.push_back(best);
  }
  return curve;
}

std::vector<double> average_return(const std::vector<double>& observations) {
  if (observations.empty()) {
    throw std::invalid_argument("average_return: no observations");
  }
  std::vector<double> curve;
  curve.reserve(observations.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    sum += observations[i];
    curve.push_back(sum / static_cast<double>(i + 1));
  }
  return curve;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) {
    throw std::invalid_argument("percentile: empty sample");
  }
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

RunSummary aggregate_runs(const std::vector<RunRecord>& records) {
  if (records.empty()) {
    throw std::invalid_argument("aggregate_runs: no records");
  }
  const int budget = records.front().budget;
  const bool has_regret = !records.front().simple_regret_curve.empty();
  for (const auto& rec : records) {
    if (rec.budget != budget) {
      throw std::invalid_argument("aggregate_runs: mixed budgets");
    }
    if (rec.simple_regret_curve.empty() == has_regret) {
      throw std::invalid_argument(
          "aggregate_runs: mixed regret availability");
    }
    if (static_cast<int>(rec.observations.size()) != budget) {
      throw std::invalid_argument(
          "aggregate_runs: incomplete record (observations != budget)");
    }
  }

  auto summarize = [&](auto curve_of) {
    CurveSummary summary;
    for (int n = 0; n < budget; ++n) {
      std::vector<double> at_n;
      at_n.reserve(records.size());
      for (const auto& rec : records) at_n.push_back(curve_of(rec)[n]);
      summary.median.push_back(percentile(at_n, 0.5));
      summary.q25.push_back(percentile(at_n, 0.25));
      summary.q75.push_back(percentile(at_n, 0.75));
    }
    return summary;
  };

  RunSummary out;
  out.budget = budget;
  out.has_regret = has_regret;
  out.average_return = summarize(
      [](const RunRecord& r) -> const std::vector<double>& {
        return r.average_return_curve;
      });
  if (has_regret) {
    out.simple_regret = summarize(
        [](const RunRecord& r) -> const std::vector<double>& {
          return r.simple_regret_curve;
        });
  }
  return out;
}

RunRecord run_crbo(Objective& obj, const Eigen::VectorXd& theta0,
                   const CrboConfig& cfg) {
  return run_impl(obj, theta0, cfg, Method::Crbo);
}

RunRecord run_standard_bo(Objective& obj, const Eigen::VectorXd& theta0,
                          const CrboConfig& cfg) {
  return run_impl(obj, theta0, cfg, Method::StandardBo);
}

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
  return v;
}

nlohmann::json hp_to_json(const GpHyperparams& hp) {
  return {{"family", hp.kernel.family == KernelFamily::Matern52
                         ? "matern52"
                         : "squared_exponential"},
          {"signal_variance", hp.kernel.signal_variance},
          {"lengthscale", hp.kernel.lengthscale},
          {"noise_variance", hp.noise_variance}};
}

GpHyperparams hp_from_json(const nlohmann::json& j) {
  GpHyperparams hp;
  hp.kernel.family = j.at("family").get<std::string>() == "matern52"
                         ? KernelFamily::Matern52
                         : KernelFamily::SquaredExponential;
  hp.kernel.signal_variance = j.at("signal_variance").get<double>();
  hp.kernel.lengthscale = j.at("lengthscale").get<double>();
  hp.noise_variance = j.at("noise_variance").get<double>();
  return hp;
}

}  // namespace

nlohmann::json RunRecord::to_json() const {
  nlohmann::json j;
  j["method"] = method;
  j["gamma"] = gamma;
  j["n_init"] = n_init;
  j["budget"] = budget;
  j["seed"] = seed;
  j["proposals"] = nlohmann::json::array();
  for (const auto& p : proposals) j["proposals"].push_back(vector_to_json(p));
  j["observations"] = observations;
  j["hyperparam_history"] = nlohmann::json::array();
  for (const auto& hp : hyperparam_history) {
    j["hyperparam_history"].push_back(hp_to_json(hp));
  }
  j["bound_history"] = bound_history;
  j["fit_warnings"] = fit_warnings;
  j["wall_time"] = wall_time;
  j["simple_regret_curve"] = simple_regret_curve;
  j["average_return_curve"] = average_return_curve;
  j["complete"] = complete;
  return j;
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
  RunRecord rec;
  rec.method = j.at("method").get<std::string>();
  rec.gamma = j.at("gamma").get<double>();
  rec.n_init = j.at("n_init").get<int>();
  rec.budget = j.at("budget").get<int>();
  rec.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& p : j.at("proposals")) {
    rec.proposals.push_back(vector_from_json(p));
  }
  rec.observations = j.at("observations").get<std::vector<double>>();
  for (const auto& hp : j.at("hyperparam_history")) {
    rec.hyperparam_history.push_back(hp_from_json(hp));
  }
  rec.bound_history = j.at("bound_history").get<std::vector<double>>();
  rec.fit_warnings = j.at("fit_warnings").get<std::vector<bool>>();
  rec.wall_time = j.at("wall_time").get<std::vector<double>>();
  rec.simple_regret_curve =
      j.at("simple_regret_curve").get<std::vector<double>>();
  rec.average_return_curve =
      j.at("average_return_curve").get<std::vector<double>>();
  rec.complete = j.at("complete").get<bool>();
  return rec;
}

}  // namespace crbo
