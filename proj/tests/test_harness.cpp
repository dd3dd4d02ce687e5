#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "steinmap/harness/benchmark.hpp"
#include "steinmap/harness/export.hpp"

using namespace steinmap;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("steinmap_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    if (!line.empty() && line.back() == ',') row.emplace_back();
    rows.push_back(std::move(row));
  }
  return rows;
}

RunConfig small_a(const std::string& estimators, int runs = 3) {
  RunConfig cfg;
  cfg.scenario = "A";
  cfg.estimators = parse_estimator_list(estimators);
  cfg.n_runs = runs;
  cfg.horizon = 25;
  cfg.svgd_iters = 60;
  cfg.svgd_step = 0.01;
  cfg.base_seed = 11;
  return cfg;
}

TEST(EstimatorRegistry, LabelsAndDefaults) {
  EXPECT_EQ(parse_estimator("ekf").label(), "ekf");
  EXPECT_EQ(parse_estimator("pf").label(), "pf:1000");
  EXPECT_EQ(parse_estimator("pf-map").param, 100);
  EXPECT_EQ(parse_estimator("stein-map-seq").param, 10);
  EXPECT_EQ(parse_estimator("iekf").label(), "iekf:3");
  EXPECT_EQ(parse_estimator("spf:25").param, 25);
  EXPECT_EQ(parse_estimator("spf", 40).param, 40);
  EXPECT_EQ(parse_estimator("spf:7", 40).param, 7);
  EXPECT_EQ(parse_estimator("ieks", 40).param, 3);
  const auto list = parse_estimator_list("ekf,,pf:5,stein-map-seq");
  ASSERT_EQ(list.size(), 3u);
  EXPECT_EQ(list[1].label(), "pf:5");
  for (const auto& n : registry_names()) EXPECT_NO_THROW(parse_estimator(n));
}

TEST(EstimatorRegistry, Errors) {
  EXPECT_THROW(parse_estimator("kalman"), ConfigError);
  EXPECT_THROW(parse_estimator("ekf:3"), ConfigError);
  EXPECT_THROW(parse_estimator("pf:0"), ConfigError);
  EXPECT_THROW(parse_estimator("pf:12x"), ConfigError);
  EXPECT_THROW(parse_estimator("pf:"), ConfigError);
  RunConfig cfg = small_a("pf:10,pf:10");
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = small_a("ekf");
  cfg.scenario = "D";
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = small_a("ekf");
  cfg.n_runs = 0;
  EXPECT_THROW(validate(cfg), ConfigError);
}

TEST(RunBenchmark, LinearEkfSingleRowIsReproducible) {
  RunConfig cfg;
  cfg.scenario = "linear";
  cfg.estimators = parse_estimator_list("ekf");
  const auto a = run_benchmark(cfg);
  const auto b = run_benchmark(cfg);
  ASSERT_EQ(a.records.size(), 1u);
  EXPECT_EQ(a.records[0].rmse, b.records[0].rmse);
  EXPECT_EQ(a.records[0].trajectory, b.records[0].trajectory);
  EXPECT_TRUE(std::isfinite(a.records[0].rmse));
}

TEST(RunBenchmark, ParallelismDoesNotChangeOutputs) {
  auto cfg = small_a("ekf,pf:50,spf:4,stein-map-seq:4");
  cfg.jobs = 1;
  const auto serial = run_benchmark(cfg);
  cfg.jobs = 3;
  const auto parallel = run_benchmark(cfg);
  const auto d1 = scratch_dir("jobs1"), d3 = scratch_dir("jobs3");
  export_results(serial, d1);
  export_results(parallel, d3);
  EXPECT_EQ(slurp(d1 / "summary.csv"), slurp(d3 / "summary.csv"));
  EXPECT_EQ(slurp(d1 / "runs.csv"), slurp(d3 / "runs.csv"));
  fs::remove_all(d1);
  fs::remove_all(d3);
}

TEST(RunBenchmark, RemovingAnEstimatorLeavesOthersUnchanged) {
  const auto full = run_benchmark(small_a("pf:50,spf:4,stein-map-seq:4"));
  const auto reduced = run_benchmark(small_a("pf:50,stein-map-seq:4"));
  for (int r = 0; r < 3; ++r) {
    EXPECT_EQ(full.at(r, 0).rmse, reduced.at(r, 0).rmse);
    EXPECT_EQ(full.at(r, 2).rmse, reduced.at(r, 1).rmse);
  }
}

TEST(RunBenchmark, CrashingEstimatorIsRecordedAndOthersContinue) {
  RunConfig cfg;
  cfg.scenario = "B";
  cfg.horizon = 5;
  cfg.estimators = parse_estimator_list("ekf,stein-map-seq:3");
  cfg.step_policy = StepPolicy::constant;
  cfg.svgd_step = 10.0;
  cfg.svgd_iters = 200;
  const auto res = run_benchmark(cfg);
  EXPECT_FALSE(res.at(0, 0).failed);
  EXPECT_TRUE(std::isfinite(res.at(0, 0).rmse));
  EXPECT_TRUE(res.at(0, 1).failed);
  EXPECT_FALSE(res.at(0, 1).message.empty());
  EXPECT_TRUE(res.any_failed());
  EXPECT_EQ(res.summaries[1].n_failed, 1);
}

TEST(ExportResults, EmptyEstimatorListWritesHeaderOnly) {
  RunConfig cfg;
  cfg.scenario = "linear";
  const auto res = run_benchmark(cfg);
  const auto dir = scratch_dir("empty");
  export_results(res, dir);
  const auto rows = read_csv(dir / "summary.csv");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0][0], "estimator");
  fs::remove_all(dir);
}

TEST(ExportResults, OneRunOneEstimatorOneRow) {
  RunConfig cfg;
  cfg.scenario = "linear";
  cfg.estimators = parse_estimator_list("eks");
  const auto dir = scratch_dir("one");
  export_results(run_benchmark(cfg), dir);
  EXPECT_EQ(read_csv(dir / "runs.csv").size(), 2u);
  EXPECT_TRUE(fs::exists(dir / "config.json"));
  EXPECT_TRUE(fs::exists(dir / "timing.csv"));
  fs::remove_all(dir);
}

TEST(ExportResults, TrajectoriesRoundTripExactly) {
  const auto res = run_benchmark(small_a("ekf,pf:30", 2));
  const auto dir = scratch_dir("roundtrip");
  export_results(res, dir);
  for (int r = 0; r < 2; ++r) {
    const auto rdir = dir / "trajectories" / std::to_string(r);
    EXPECT_EQ(read_trajectory_csv(rdir / "truth.csv"), res.runs[static_cast<std::size_t>(r)].truth);
    EXPECT_EQ(read_trajectory_csv(rdir / "ekf.csv"), res.at(r, 0).trajectory);
    EXPECT_EQ(read_trajectory_csv(rdir / "pf_30.csv"), res.at(r, 1).trajectory);
  }
  fs::remove_all(dir);
}

TEST(ExportResults, SummaryMeansMatchRunsCsv) {
  const auto res = run_benchmark(small_a("ekf,eks,pf:40", 5));
  const auto dir = scratch_dir("aggregate");
  export_results(res, dir);
  std::map<std::string, std::pair<double, int>> acc;
  const auto runs = read_csv(dir / "runs.csv");
  for (std::size_t i = 1; i < runs.size(); ++i) {
    if (runs[i][5] == "1") continue;
    auto& a = acc[runs[i][1]];
    a.first += std::stod(runs[i][2]);
    a.second += 1;
  }
  const auto summary = read_csv(dir / "summary.csv");
  ASSERT_EQ(summary.size(), 4u);
  for (std::size_t i = 1; i < summary.size(); ++i) {
    const auto& a = acc.at(summary[i][0]);
    EXPECT_NEAR(std::stod(summary[i][2]), a.first / a.second, 1e-12);
  }
  fs::remove_all(dir);
}

TEST(ExportResults, UnwritableDirectoryIsAnIoError) {
  const auto base = scratch_dir("blocker");
  fs::create_directories(base);
  { std::ofstream(base / "file") << "x"; }
  EXPECT_THROW(ensure_writable(base / "file" / "out"), IoError);
  RunConfig cfg;
  cfg.scenario = "linear";
  EXPECT_THROW(export_results(run_benchmark(cfg), base / "file" / "out"), IoError);
  fs::remove_all(base);
}

TEST(EmitPlotData, TruthCloudsAndBlockedColumn) {
  RunConfig cfg;
  cfg.scenario = "C";
  cfg.horizon = 400;
  cfg.estimators = parse_estimator_list("ekf,pf:20");
  cfg.keep_clouds = true;
  const auto res = run_benchmark(cfg);
  const auto dir = scratch_dir("plot");
  const int steps[] = {1, 310, 999};
  emit_plot_data(res, 0, dir, steps);

  const auto rows = read_csv(dir / "truth_vs_estimates.csv");
  ASSERT_EQ(rows.size(), 402u);
  const auto& header = rows[0];
  ASSERT_EQ(header.back(), "blocked");
  const auto map = default_anchor_map(400);
  for (std::size_t t = 0; t <= 400; ++t) {
    const auto& row = rows[t + 1];
    EXPECT_EQ(std::stod(row[1]), res.runs[0].truth[t][0]);
    EXPECT_EQ(std::stod(row[2]), res.runs[0].truth[t][1]);
    const bool b = t >= 1 && map.blocked(0, static_cast<int>(t));
    EXPECT_EQ(row.back(), b ? "1" : "0") << t;
  }
  EXPECT_FALSE(fs::exists(dir / "clouds_ekf.csv"));
  const auto clouds = read_csv(dir / "clouds_pf_20.csv");
  EXPECT_EQ(clouds.size(), 1u + 2u * 20u);
  fs::remove_all(dir);
}

TEST(DatasetCsv, RowsMatchDataset) {
  const auto ds = gen_scenario_c(3, 50);
  const auto dir = scratch_dir("dataset");
  fs::create_directories(dir);
  write_dataset_csv(ds, dir / "dataset.csv");
  const auto rows = read_csv(dir / "dataset.csv");
  ASSERT_EQ(rows.size(), 52u);
  EXPECT_EQ(rows[0].size(), 1u + 2u + 3u + 3u);
  EXPECT_EQ(rows[1][3], "");
  EXPECT_EQ(std::stod(rows[11][3]), ds.observations[9].values[0]);
  fs::remove_all(dir);
}

TEST(Config, FileValuesAndUnknownKeys) {
  const auto dir = scratch_dir("config");
  fs::create_directories(dir);
  { std::ofstream(dir / "c.json") << R"({"scenario": "B", "runs": 4, "estimators": ["ekf", "pf:200"], "svgd_iters": 7})"; }
  RunConfig base;
  base.jobs = 3;
  const auto cfg = load_config_file(dir / "c.json", base);
  EXPECT_EQ(cfg.scenario, "B");
  EXPECT_EQ(cfg.n_runs, 4);
  EXPECT_EQ(cfg.svgd_iters, 7);
  EXPECT_EQ(cfg.jobs, 3);
  ASSERT_EQ(cfg.estimators.size(), 2u);
  EXPECT_EQ(cfg.estimators[1].label(), "pf:200");
  const auto j = effective_config_json(cfg);
  EXPECT_EQ(j["horizon"], 630);
  EXPECT_EQ(j["step_policy"], "adagrad");

  { std::ofstream(dir / "bad.json") << R"({"sceanrio": "A"})"; }
  EXPECT_THROW(load_config_file(dir / "bad.json"), ConfigError);
  { std::ofstream(dir / "broken.json") << "{runs: 3"; }
  EXPECT_THROW(load_config_file(dir / "broken.json"), ConfigError);
  { std::ofstream(dir / "type.json") << R"({"runs": "many"})"; }
  EXPECT_THROW(load_config_file(dir / "type.json"), ConfigError);
  EXPECT_THROW(load_config_file(dir / "missing.json"), ConfigError);
  fs::remove_all(dir);
}

TEST(Summaries, QuantilesAndSampleStd) {
  EstimatorSpec spec = parse_estimator("ekf");
  std::vector<RunRecord> recs(4);
  const double v[] = {1.0, 2.0, 3.0, 4.0};
  for (int i = 0; i < 4; ++i) recs[static_cast<std::size_t>(i)].rmse = v[i];
  recs.emplace_back();
  recs.back().failed = true;
  const auto s = summarize(spec, recs);
  EXPECT_EQ(s.n_ok, 4);
  EXPECT_EQ(s.n_failed, 1);
  EXPECT_DOUBLE_EQ(s.mean_rmse, 2.5);
  EXPECT_NEAR(s.std_rmse, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_DOUBLE_EQ(s.median, 2.5);
}

}  // namespace
