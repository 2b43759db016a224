#include "crbo/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "crbo/benchmarks.hpp"

namespace fs = std::filesystem;

namespace crbo {

namespace {

std::string format_gamma(double gamma) {
  std::ostringstream oss;
  oss << gamma;
  return oss.str();
}

std::string csv_number(double v) {
  std::ostringstream oss;
  oss.precision(12);
  oss << v;
  return oss.str();
}

void write_curve_csv(const fs::path& path, const CurveSummary& curve) {
  std::ofstream out(path);
  out << "iteration,median,q25,q75\n";
  for (std::size_t n = 0; n < curve.median.size(); ++n) {
    out << (n + 1) << ',' << csv_number(curve.median[n]) << ','
        << csv_number(curve.q25[n]) << ',' << csv_number(curve.q75[n])
        << '\n';
  }
}

struct Job {
  double gamma;
  int realization;
  int repetition;
  int index;
};

}  // namespace

void ExperimentConfig::validate() const {
  if (method != "crbo" && method != "standard_bo") {
    throw std::invalid_argument("config field 'method': expected 'crbo' or "
                                "'standard_bo', got '" + method + "'");
  }
  if (suite != "gp2d" && suite != "gp5d" && suite != "pendulum") {
    throw std::invalid_argument("config field 'suite': expected 'gp2d', "
                                "'gp5d' or 'pendulum', got '" + suite + "'");
  }
  if (realizations <= 0) {
    throw std::invalid_argument("config field 'realizations': must be > 0");
  }
  if (repetitions <= 0) {
    throw std::invalid_argument("config field 'repetitions': must be > 0");
  }
  if (gammas.empty()) {
    throw std::invalid_argument("config field 'gamma': at least one value");
  }
  for (const double g : gammas) {
    if (!(g > 0.0 && g <= 1.0)) {
      throw std::invalid_argument(
          "config field 'gamma': values must lie in (0, 1]");
    }
  }
  if (budget <= 1) {
    throw std::invalid_argument("config field 'budget': must be > 1");
  }
  if (samples <= 0) {
    throw std::invalid_argument("config field 'samples': must be > 0");
  }
  if (!(initial_distance > 0.0)) {
    throw std::invalid_argument(
        "config field 'initial_distance': must be > 0");
  }
  if (output_dir.empty()) {
    throw std::invalid_argument("config field 'output_dir': must be set");
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"method", method},
          {"suite", suite},
          {"realizations", realizations},
          {"repetitions", repetitions},
          {"gamma", gammas},
          {"budget", budget},
          {"seed", seed},
          {"beta", beta},
          {"samples", samples},
          {"initial_distance", initial_distance},
          {"output_dir", output_dir},
          {"workers", workers}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) {
      try {
        field = j.at(key).get<std::decay_t<decltype(field)>>();
      } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config field '") + key +
                                    "': " + e.what());
      }
    }
  };
  get("method", cfg.method);
  get("suite", cfg.suite);
  get("realizations", cfg.realizations);
  get("repetitions", cfg.repetitions);
  get("budget", cfg.budget);
  get("seed", cfg.seed);
  get("beta", cfg.beta);
  get("samples", cfg.samples);
  get("initial_distance", cfg.initial_distance);
  get("output_dir", cfg.output_dir);
  get("workers", cfg.workers);
  if (j.contains("gamma")) {
    const auto& g = j.at("gamma");
    if (g.is_number()) {
      cfg.gammas = {g.get<double>()};
    } else {
      cfg.gammas = g.get<std::vector<double>>();
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("config file not readable: " + path);
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config file " + path + ": " + e.what());
  }
  ExperimentConfig cfg = ExperimentConfig::from_json(j);
  cfg.validate();
  return cfg;
}

namespace {

RunRecord execute_job(const ExperimentConfig& cfg, const Job& job,
                      std::optional<std::pair<double, Eigen::VectorXd>>*
                          optimum_out) {
  CrboConfig run_cfg;
  run_cfg.gamma = job.gamma;
  run_cfg.budget = cfg.budget;
  run_cfg.sampler.total_samples = cfg.samples;
  run_cfg.acquisition.beta = cfg.beta;
  run_cfg.seed =
      mix_seed(cfg.seed, 0x6a6f6200ULL + static_cast<std::uint64_t>(job.index));

  if (cfg.suite == "pendulum") {
    ToyPendulumObjective::Config pcfg;
    ToyPendulumObjective obj(
        pcfg, mix_seed(cfg.seed, 0x70656e00ULL +
                                     static_cast<std::uint64_t>(job.index)));
    const Eigen::VectorXd theta0 = obj.domain().center();
    return cfg.method == "crbo" ? run_crbo(obj, theta0, run_cfg)
                                : run_standard_bo(obj, theta0, run_cfg);
  }

  GpSampleObjective::Config gcfg;
  gcfg.dim = cfg.suite == "gp5d" ? 5 : 2;
  GpSampleObjective obj(
      gcfg,
      mix_seed(cfg.seed, static_cast<std::uint64_t>(job.realization)));
  obj.find_optimum();
  if (optimum_out) {
    *optimum_out = {{*obj.optimum(), obj.arg_optimum()}};
  }
  const Eigen::VectorXd theta0 = sample_initial_point(
      obj, cfg.initial_distance,
      mix_seed(cfg.seed, 0x696e6974ULL +
                             static_cast<std::uint64_t>(
                                 job.realization * 1000 + job.repetition)));
  return cfg.method == "crbo" ? run_crbo(obj, theta0, run_cfg)
                              : run_standard_bo(obj, theta0, run_cfg);
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  fs::create_directories(cfg.output_dir);

  std::vector<Job> jobs;
  int index = 0;
  for (const double gamma : cfg.gammas) {
    for (int r = 0; r < cfg.realizations; ++r) {
      for (int k = 0; k < cfg.repetitions; ++k) {
        jobs.push_back(Job{gamma, r, k, index++});
      }
    }
  }

  std::vector<RunRecord> records(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::map<int, std::pair<double, Eigen::VectorXd>> optima;
  std::mutex optima_mutex;

  const int n_workers = cfg.workers > 0
                            ? cfg.workers
                            : std::max(1u, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) break;
      try {
        std::optional<std::pair<double, Eigen::VectorXd>> opt;
        records[i] = execute_job(cfg, jobs[i], &opt);
        if (opt) {
          std::lock_guard<std::mutex> lock(optima_mutex);
          optima.emplace(jobs[i].realization, *opt);
        }
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  bool any_failed = false;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!errors[i].empty()) {
      any_failed = true;
      log << "run failed (gamma=" << jobs[i].gamma << ", realization "
          << jobs[i].realization << ", rep " << jobs[i].repetition
          << "): " << errors[i] << "\n";
      continue;
    }
    std::ostringstream name;
    name << cfg.method << "_g" << format_gamma(jobs[i].gamma) << "_real"
         << jobs[i].realization << "_rep" << jobs[i].repetition << ".json";
    std::ofstream out(fs::path(cfg.output_dir) / name.str());
    out << records[i].to_json().dump(2) << "\n";
  }

  // Suite manifest: realization seeds and the cached optima.
  if (cfg.suite != "pendulum") {
    nlohmann::json manifest;
    manifest["config"] = cfg.to_json();
    manifest["realizations"] = nlohmann::json::array();
    for (const auto& [r, opt] : optima) {
      nlohmann::json entry;
      entry["realization"] = r;
      entry["seed"] = mix_seed(cfg.seed, static_cast<std::uint64_t>(r));
      entry["y_star"] = opt.first;
      entry["theta_star"] = std::vector<double>(
          opt.second.data(), opt.second.data() + opt.second.size());
      manifest["realizations"].push_back(entry);
    }
    std::ofstream out(fs::path(cfg.output_dir) / "manifest.json");
    out << manifest.dump(2) << "\n";
  }

  // Aggregate per gamma across realizations and repetitions.
  for (const double gamma : cfg.gammas) {
    std::vector<RunRecord> group;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (jobs[i].gamma == gamma && errors[i].empty() &&
          records[i].complete) {
        group.push_back(records[i]);
      }
    }
    if (group.empty()) continue;
    const RunSummary summary = aggregate_runs(group);
    const std::string prefix =
        cfg.method + "_g" + format_gamma(gamma) + "_";
    write_curve_csv(fs::path(cfg.output_dir) / (prefix + "average_return.csv"),
                    summary.average_return);
    if (summary.has_regret) {
      write_curve_csv(
          fs::path(cfg.output_dir) / (prefix + "simple_regret.csv"),
          summary.simple_regret);
    }
    log << cfg.method << " gamma=" << format_gamma(gamma) << ": " << group.size()
        << " runs, final median avg return "
        << summary.average_return.median.back();
    if (summary.has_regret) {
      log << ", final median simple regret "
          << summary.simple_regret.median.back();
    }
    log << "\n";
  }

  return any_failed ? 1 : 0;
}

int write_report(const std::string& results_dir, std::ostream& log) {
  std::vector<fs::path> files;
  if (fs::is_directory(results_dir)) {
    for (const auto& entry : fs::directory_iterator(results_dir)) {
      const std::string name = entry.path().filename().string();
      if (entry.path().extension() == ".json" && name != "manifest.json") {
        files.push_back(entry.path());
      }
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    log << "report: no RunRecord files found in " << results_dir << "\n";
    return 2;
  }

  std::map<std::pair<std::string, double>, std::vector<RunRecord>> groups;
  for (const auto& path : files) {
    std::ifstream in(path);
    nlohmann::json j;
    try {
      in >> j;
      const RunRecord rec = RunRecord::from_json(j);
      groups[{rec.method, rec.gamma}].push_back(rec);
    } catch (const std::exception& e) {
      log << "report: skipping unreadable record " << path << ": " << e.what()
          << "\n";
    }
  }
  if (groups.empty()) {
    log << "report: no readable RunRecord files in " << results_dir << "\n";
    return 2;
  }

  log << "method      gamma   runs  final med regret  final med avg return\n";
  for (const auto& [key, group] : groups) {
    RunSummary summary;
    try {
      summary = aggregate_runs(group);
    } catch (const std::exception& e) {
      log << "report: group (" << key.first << ", gamma=" << key.second
          << ") is inconsistent: " << e.what() << "\n";
      return 2;
    }
    const std::string prefix =
        "report_" + key.first + "_g" + format_gamma(key.second) + "_";
    write_curve_csv(
        fs::path(results_dir) / (prefix + "average_return.csv"),
        summary.average_return);
    std::ostringstream regret_text;
    if (summary.has_regret) {
      write_curve_csv(
          fs::path(results_dir) / (prefix + "simple_regret.csv"),
          summary.simple_regret);
      regret_text << summary.simple_regret.median.back();
    } else {
      regret_text << "n/a";
    }
    log << key.first << "  " << format_gamma(key.second) << "  "
        << group.size() << "  " << regret_text.str() << "  "
        << summary.average_return.median.back() << "\n";
  }
  return 0;
}

}  // namespace crbo
