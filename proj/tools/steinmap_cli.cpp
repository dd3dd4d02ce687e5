// Benchmark runner: Monte Carlo comparisons, dataset/figure export and the oracle suites.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "steinmap/harness/benchmark.hpp"
#include "steinmap/harness/export.hpp"
#include "steinmap/harness/oracle_suite.hpp"

namespace {

using namespace steinmap;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

std::string default_out_dir() {
  if (const char* env = std::getenv("STEINMAP_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return "results";
}

struct CommonFlags {
  std::string config_file;
  std::string scenario;
  std::string estimators;
  std::optional<int> runs;
  std::optional<int> horizon;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> jobs;
  std::optional<int> particles;
  std::optional<int> svgd_iters;
  std::optional<double> svgd_step;
  std::string init_policy;
  std::string step_policy;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_file, "JSON config file; flags given on the command line override it");
  cmd->add_option("--scenario", f.scenario, "Scenario: A (UNGM), B (unicycle landmarks), C (range-only), linear");
  cmd->add_option("--estimators", f.estimators,
                  "Comma separated list, e.g. ekf,eks,iekf:3,ieks:3,pf:1000,pf-map:100,pf-map-seq:100,spf:10,"
                  "spf-map:10,stein-map-seq:10 (also eks-gt, ieks-gt:N)");
  cmd->add_option("--runs", f.runs, "Number of Monte Carlo runs")->check(CLI::PositiveNumber);
  cmd->add_option("--horizon", f.horizon, "Steps per run (0 = scenario default)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", f.seed, "Base seed; run r uses seed + r");
  cmd->add_option("--out", f.out, "Output directory (default: $STEINMAP_OUT_DIR or ./results)");
  cmd->add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--particles", f.particles, "Particle count for sampling estimators given without ':N'")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--svgd-iters", f.svgd_iters, "SVGD iterations per step")->check(CLI::NonNegativeNumber);
  cmd->add_option("--svgd-step", f.svgd_step, "SVGD step size")->check(CLI::PositiveNumber);
  cmd->add_option("--init-policy", f.init_policy, "propagate_sample, propagate_mean or carry_over");
  cmd->add_option("--step-policy", f.step_policy, "constant or adagrad (default: adagrad for B, constant otherwise)");
}

RunConfig resolve(const CommonFlags& f, std::string_view default_estimators) {
  RunConfig cfg;
  cfg.estimators = parse_estimator_list(default_estimators);
  if (!f.config_file.empty()) cfg = load_config_file(f.config_file, cfg);
  if (!f.scenario.empty()) cfg.scenario = f.scenario;
  if (!f.estimators.empty()) cfg.estimators = parse_estimator_list(f.estimators, f.particles);
  else if (f.particles) {
    std::string labels;
    for (const auto& e : cfg.estimators) labels += (labels.empty() ? "" : ",") + e.name;
    cfg.estimators = parse_estimator_list(labels, f.particles);
  }
  if (f.runs) cfg.n_runs = *f.runs;
  if (f.horizon) cfg.horizon = *f.horizon;
  if (f.seed) cfg.base_seed = *f.seed;
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (cfg.out_dir.empty()) cfg.out_dir = default_out_dir();
  if (f.jobs) cfg.jobs = *f.jobs;
  if (f.svgd_iters) cfg.svgd_iters = *f.svgd_iters;
  if (f.svgd_step) cfg.svgd_step = *f.svgd_step;
  if (!f.init_policy.empty()) cfg.init_policy = parse_init_policy(f.init_policy);
  if (!f.step_policy.empty()) cfg.step_policy = parse_step_policy(f.step_policy);
  validate(cfg);
  return cfg;
}

void print_summary(const RunResult& res) {
  std::printf("%-20s %6s %12s %12s %10s %8s %8s %12s\n", "estimator", "N_s", "mean_rmse", "std_rmse", "median",
              "diverged", "failed", "wall_ms");
  for (const auto& s : res.summaries) {
    std::printf("%-20s %6d %12.4f %12.4f %10.4f %8d %8d %12.1f\n", s.estimator.c_str(), s.num_particles, s.mean_rmse,
                s.std_rmse, s.median, s.n_diverged, s.n_failed, s.mean_wall_ms);
  }
  for (const auto& r : res.records) {
    if (r.failed) std::fprintf(stderr, "run %d %s failed: %s\n", r.run_id, r.estimator.c_str(), r.message.c_str());
  }
}

int cmd_run(const CommonFlags& f, bool keep_trajectories) {
  RunConfig cfg = resolve(f, "ekf,eks,pf,stein-map-seq");
  cfg.keep_trajectories = keep_trajectories;
  ensure_writable(cfg.out_dir);
  const auto res = run_benchmark(cfg);
  export_results(res, cfg.out_dir);
  print_summary(res);
  std::printf("results written to %s\n", cfg.out_dir.c_str());
  return res.any_failed() ? kExitPartial : kExitOk;
}

int cmd_export(const CommonFlags& f, const std::vector<int>& steps, int run_id) {
  RunConfig cfg = resolve(f, "");
  if (run_id < 0) throw ConfigError("--run must be >= 0");
  ensure_writable(cfg.out_dir);
  const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(run_id);
  visit_dataset(cfg.scenario, seed, effective_horizon(cfg),
                [&](const auto& ds) { write_dataset_csv(ds, fs::path(cfg.out_dir) / "dataset.csv"); });
  if (cfg.estimators.empty()) return kExitOk;
  RunConfig one = cfg;
  one.base_seed = seed;
  one.n_runs = 1;
  one.keep_clouds = true;
  const auto res = run_benchmark(one);
  export_results(res, cfg.out_dir);
  emit_plot_data(res, 0, fs::path(cfg.out_dir) / "plot", steps);
  print_summary(res);
  std::printf("dataset and figure data written to %s\n", cfg.out_dir.c_str());
  return res.any_failed() ? kExitPartial : kExitOk;
}

int cmd_oracle(int instances, int points, std::uint64_t seed) {
  const auto dp = dp_oracle_suite(instances, seed);
  std::printf("dp oracle: %d/%d instances agree (%d with -inf entries, %d without admissible path)\n", dp.agreed,
              dp.instances, dp.with_neg_inf, dp.both_inadmissible);
  for (const auto& msg : dp.failures) std::printf("  %s\n", msg.c_str());
  bool ok = dp.passed();
  for (const auto& g : gradient_suite(points, seed)) {
    std::printf("gradients %-26s %d/%d points, worst relative error %.3g\n", g.model.c_str(), g.passed_points, g.points,
                g.worst_rel_error);
    ok = ok && g.passed();
  }
  return ok ? kExitOk : kExitPartial;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stein-MAP-Seq benchmark runner"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  bool no_traj = false;
  auto* run = app.add_subcommand("run", "Run a Monte Carlo benchmark and write summary/runs/trajectory CSVs");
  add_common_flags(run, run_flags);
  run->add_flag("--no-trajectories", no_traj, "Skip per-run trajectory CSVs");

  CommonFlags export_flags;
  std::vector<int> steps{1};
  int run_id = 0;
  auto* exp = app.add_subcommand("export", "Write one dataset CSV and, with --estimators, figure data for it");
  add_common_flags(exp, export_flags);
  exp->add_option("--steps", steps, "Steps whose particle clouds are written")->delimiter(',');
  exp->add_option("--run", run_id, "Run index; the dataset seed is seed + run");

  int instances = 200;
  int points = 100;
  std::uint64_t oracle_seed = 2024;
  auto* oracle = app.add_subcommand("oracle-check", "Run the DP brute-force and gradient oracle suites");
  oracle->add_option("--instances", instances, "Random DP instances")->check(CLI::PositiveNumber);
  oracle->add_option("--points", points, "Gradient check points per model")->check(CLI::PositiveNumber);
  oracle->add_option("--seed", oracle_seed, "Seed of the random instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_flags, !no_traj);
    if (*exp) return cmd_export(export_flags, steps, run_id);
    return cmd_oracle(instances, points, oracle_seed);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitPartial;
  }
}
