#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "steinmap/harness/estimators.hpp"
#include "steinmap/random.hpp"
#include "steinmap/scenarios/linear_gaussian.hpp"
#include "steinmap/scenarios/metrics.hpp"
#include "steinmap/scenarios/scenario_a.hpp"
#include "steinmap/scenarios/scenario_b.hpp"
#include "steinmap/scenarios/scenario_c.hpp"

namespace steinmap {

struct RunConfig {
  std::string scenario = "A";  // A, B, C or linear
  std::vector<EstimatorSpec> estimators;
  int n_runs = 1;
  int horizon = 0;  // 0 selects the scenario default
  std::uint64_t base_seed = 1;
  std::string out_dir;
  int jobs = 1;
  double svgd_step = 1e-3;
  int svgd_iters = 1000;
  InitPolicy init_policy = InitPolicy::propagate_sample;
  /// Unset selects the scenario default (adagrad for B, constant otherwise).
  std::optional<StepPolicy> step_policy;
  bool keep_trajectories = true;
  bool keep_clouds = false;
};

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"A", "B", "C", "linear"};
  return names;
}

inline int default_horizon(const std::string& scenario) {
  if (scenario == "A") return 100;
  if (scenario == "B") return 630;
  if (scenario == "C") return kScenarioCSteps;
  if (scenario == "linear") return 50;
  throw ConfigError("unknown scenario '" + scenario + "'");
}

/// The unicycle transition has curvature ~1/(0.005)^2, where a constant step of 1e-3
/// overshoots by a factor of ~40 and the particles blow up.
inline StepPolicy default_step_policy(const std::string& scenario) {
  return scenario == "B" ? StepPolicy::adagrad : StepPolicy::constant;
}

inline int effective_horizon(const RunConfig& cfg) {
  return cfg.horizon > 0 ? cfg.horizon : default_horizon(cfg.scenario);
}

inline SvgdConfig effective_svgd(const RunConfig& cfg) {
  SvgdConfig s;
  s.step_size = cfg.svgd_step;
  s.iterations = cfg.svgd_iters;
  s.init_policy = cfg.init_policy;
  s.step_policy = cfg.step_policy.value_or(default_step_policy(cfg.scenario));
  return s;
}

inline void validate(const RunConfig& cfg) {
  const auto& names = scenario_names();
  if (std::find(names.begin(), names.end(), cfg.scenario) == names.end()) {
    throw ConfigError("unknown scenario '" + cfg.scenario + "'");
  }
  if (cfg.n_runs < 1) throw ConfigError("runs must be >= 1");
  if (cfg.horizon < 0) throw ConfigError("horizon must be >= 0");
  if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (!(cfg.svgd_step > 0.0)) throw ConfigError("svgd step must be > 0");
  if (cfg.svgd_iters < 0) throw ConfigError("svgd iterations must be >= 0");
  for (const auto& e : cfg.estimators) parse_estimator(e.label());
  for (std::size_t i = 0; i < cfg.estimators.size(); ++i) {
    for (std::size_t j = i + 1; j < cfg.estimators.size(); ++j) {
      if (cfg.estimators[i].label() == cfg.estimators[j].label()) {
        throw ConfigError("estimator '" + cfg.estimators[i].label() + "' listed twice");
      }
    }
  }
}

using Row = std::vector<double>;

struct RunRecord {
  int run_id = 0;
  std::string estimator;
  std::uint64_t seed = 0;  // dataset seed
  double rmse = std::numeric_limits<double>::quiet_NaN();
  /// Scenario specific secondary metrics: heading_rmse (B), blocked_rmse (C).
  std::vector<std::pair<std::string, double>> extra;
  bool diverged = false;
  bool failed = false;
  std::string message;
  double wall_ms = 0.0;
  std::vector<Row> trajectory;  // t = 0..T
  std::vector<std::vector<Row>> clouds;  // t = 1..T
};

struct EstimatorSummary {
  std::string estimator;
  int num_particles = 0;  // 0 for Gaussian estimators
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
  double q10 = 0.0;
  double median = 0.0;
  double q90 = 0.0;
  int n_ok = 0;
  int n_diverged = 0;
  int n_failed = 0;
  double mean_wall_ms = 0.0;
};

struct RunData {
  int run_id = 0;
  std::uint64_t seed = 0;
  std::vector<Row> truth;
  std::vector<std::uint8_t> blocked;
  std::vector<std::string> warnings;
};

struct RunResult {
  RunConfig config;
  std::vector<RunData> runs;
  /// Ordered by run, then by position in the estimator list.
  std::vector<RunRecord> records;
  std::vector<EstimatorSummary> summaries;

  bool any_failed() const {
    return std::any_of(records.begin(), records.end(), [](const RunRecord& r) { return r.failed; });
  }
  const RunRecord& at(int run, std::size_t estimator) const {
    return records[static_cast<std::size_t>(run) * config.estimators.size() + estimator];
  }
};

/// Linear-interpolated quantile of sorted values.
inline double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Aggregates over the runs that completed; failed runs only count in n_failed. Diverged
/// runs stay in the mean.
inline EstimatorSummary summarize(const EstimatorSpec& spec, std::span<const RunRecord> recs) {
  EstimatorSummary s;
  s.estimator = spec.label();
  s.num_particles = spec.is_sampling() ? spec.param : 0;
  std::vector<double> vals;
  double wall = 0.0;
  for (const auto& r : recs) {
    wall += r.wall_ms;
    if (r.failed) {
      ++s.n_failed;
      continue;
    }
    if (r.diverged) ++s.n_diverged;
    vals.push_back(r.rmse);
  }
  s.n_ok = static_cast<int>(vals.size());
  if (!recs.empty()) s.mean_wall_ms = wall / static_cast<double>(recs.size());
  if (vals.empty()) {
    s.mean_rmse = s.std_rmse = s.q10 = s.median = s.q90 = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  double sum = 0.0;
  for (double v : vals) sum += v;
  s.mean_rmse = sum / static_cast<double>(vals.size());
  double ss = 0.0;
  for (double v : vals) ss += (v - s.mean_rmse) * (v - s.mean_rmse);
  s.std_rmse = vals.size() > 1 ? std::sqrt(ss / static_cast<double>(vals.size() - 1)) : 0.0;
  std::sort(vals.begin(), vals.end());
  s.q10 = quantile_sorted(vals, 0.1);
  s.median = quantile_sorted(vals, 0.5);
  s.q90 = quantile_sorted(vals, 0.9);
  return s;
}

namespace detail {

template <class State>
Row to_row(const State& x) {
  return Row(x.data(), x.data() + x.size());
}

template <class State>
std::vector<Row> to_rows(const std::vector<State>& xs) {
  std::vector<Row> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(to_row(x));
  return out;
}

template <class M>
void score_record(RunRecord& rec, const ScenarioDataset<M>& ds, const Trajectory<typename M::State>& est) {
  const auto ang = ds.model.angular_components();
  if (ds.scenario == "B") {
    const int pos[] = {0, 1};
    const int heading[] = {2};
    rec.rmse = rmse(est, ds.truth, ang, pos);
    rec.extra.emplace_back("heading_rmse", rmse(est, ds.truth, ang, heading));
  } else {
    rec.rmse = rmse(est, ds.truth, ang);
  }
  if (std::any_of(ds.blocked.begin(), ds.blocked.end(), [](std::uint8_t b) { return b != 0; })) {
    rec.extra.emplace_back("blocked_rmse", rmse(est, ds.truth, ang, {}, ds.blocked));
  }
  if (!std::isfinite(rec.rmse)) rec.diverged = true;
}

/// Runs fn(job) for job in [0, n) on `workers` threads. Each job writes only its own slot,
/// so the outcome does not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const auto w = static_cast<std::size_t>(std::max(1, workers));
  if (w == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < std::min(w, n); ++k) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

template <class M, class Gen>
RunResult run_scenario(const RunConfig& cfg, Gen&& generate) {
  RunResult result;
  result.config = cfg;
  const int T = effective_horizon(cfg);
  const SvgdConfig svgd = effective_svgd(cfg);
  const std::size_t n_est = cfg.estimators.size();

  std::vector<ScenarioDataset<M>> datasets;
  datasets.reserve(static_cast<std::size_t>(cfg.n_runs));
  for (int r = 0; r < cfg.n_runs; ++r) {
    const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(r);
    datasets.push_back(generate(seed, T));
    RunData rd;
    rd.run_id = r;
    rd.seed = seed;
    rd.truth = to_rows(datasets.back().truth.states);
    rd.blocked = datasets.back().blocked;
    rd.warnings = datasets.back().warnings;
    result.runs.push_back(std::move(rd));
  }

  result.records.resize(static_cast<std::size_t>(cfg.n_runs) * n_est);
  parallel_for(result.records.size(), cfg.jobs, [&](std::size_t job) {
    const std::size_t r = job / n_est;
    const EstimatorSpec& spec = cfg.estimators[job % n_est];
    const auto& ds = datasets[r];
    RunRecord& rec = result.records[job];
    rec.run_id = static_cast<int>(r);
    rec.estimator = spec.label();
    rec.seed = ds.seed;
    Rng rng = make_rng(ds.seed, spec.label());
    const auto start = std::chrono::steady_clock::now();
    try {
      auto out = run_estimator(spec, ds, svgd, rng, cfg.keep_clouds);
      score_record(rec, ds, out.trajectory);
      rec.diverged = rec.diverged || out.trajectory.diverged;
      if (cfg.keep_trajectories) rec.trajectory = to_rows(out.trajectory.states);
      for (const auto& c : out.clouds) rec.clouds.push_back(to_rows(c));
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.message = e.what();
      rec.rmse = std::numeric_limits<double>::quiet_NaN();
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  });

  for (std::size_t e = 0; e < n_est; ++e) {
    std::vector<RunRecord> recs;
    for (int r = 0; r < cfg.n_runs; ++r) recs.push_back(result.at(r, e));
    result.summaries.push_back(summarize(cfg.estimators[e], recs));
  }
  return result;
}

}  // namespace detail

/// Generates the dataset of `scenario` for one seed and hands it to fn.
template <class Fn>
void visit_dataset(const std::string& scenario, std::uint64_t seed, int T, Fn&& fn) {
  if (scenario == "A") {
    fn(gen_scenario_a(seed, T));
  } else if (scenario == "B") {
    fn(gen_scenario_b(seed, T));
  } else if (scenario == "C") {
    fn(gen_scenario_c(seed, T));
  } else if (scenario == "linear") {
    fn(gen_scenario_linear(seed, T));
  } else {
    throw ConfigError("unknown scenario '" + scenario + "'");
  }
}

/// Generates n_runs datasets (seed base_seed + run) and runs every estimator on each. An
/// estimator that throws is recorded as a failed run and the benchmark carries on.
inline RunResult run_benchmark(const RunConfig& cfg) {
  validate(cfg);
  if (cfg.scenario == "A") return detail::run_scenario<UngmModel>(cfg, gen_scenario_a);
  if (cfg.scenario == "B") return detail::run_scenario<UnicycleLandmarkModel>(cfg, gen_scenario_b);
  if (cfg.scenario == "C") {
    return detail::run_scenario<RangeOnlyModel>(cfg, [](std::uint64_t s, int T) { return gen_scenario_c(s, T); });
  }
  return detail::run_scenario<LinearGaussianModel<1>>(cfg, gen_scenario_linear);
}

}  // namespace steinmap
