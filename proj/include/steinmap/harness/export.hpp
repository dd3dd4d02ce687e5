#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "steinmap/errors.hpp"
#include "steinmap/harness/benchmark.hpp"

namespace steinmap {

namespace fs = std::filesystem;

/// Shortest text that reads back to the same double: 17 significant digits.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string file_label(std::string label) {
  for (char& c : label) {
    if (c == ':') c = '_';
  }
  return label;
}

/// Creates `dir` and proves it writable with a probe file, so a bad output location is
/// reported before any computation starts.
inline void ensure_writable(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream f(probe, std::ios::binary);
    if (!f || !(f << "ok")) throw IoError("output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

namespace detail {

class CsvWriter {
 public:
  explicit CsvWriter(const fs::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  }

  CsvWriter& cell(const std::string& s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
    return *this;
  }
  CsvWriter& cell(double v) { return cell(format_double(v)); }
  CsvWriter& cell(long long v) { return cell(std::to_string(v)); }
  CsvWriter& cell(unsigned long long v) { return cell(std::to_string(v)); }
  CsvWriter& cell(int v) { return cell(std::to_string(v)); }
  void end_row() {
    out_ << '\n';
    first_ = true;
  }
  void close() {
    out_.close();
    if (!out_) throw IoError("failed writing " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
  bool first_ = true;
};

inline void write_state_header(CsvWriter& w, const std::string& prefix, std::size_t dim) {
  for (std::size_t c = 0; c < dim; ++c) w.cell(prefix + "x" + std::to_string(c));
}

}  // namespace detail

inline std::string to_string(StepPolicy p) { return p == StepPolicy::adagrad ? "adagrad" : "constant"; }

inline std::string to_string(InitPolicy p) {
  switch (p) {
    case InitPolicy::propagate_mean:
      return "propagate_mean";
    case InitPolicy::carry_over:
      return "carry_over";
    default:
      return "propagate_sample";
  }
}

inline StepPolicy parse_step_policy(const std::string& s) {
  if (s == "constant") return StepPolicy::constant;
  if (s == "adagrad") return StepPolicy::adagrad;
  throw ConfigError("unknown step policy '" + s + "'");
}

inline InitPolicy parse_init_policy(const std::string& s) {
  if (s == "propagate_sample") return InitPolicy::propagate_sample;
  if (s == "propagate_mean") return InitPolicy::propagate_mean;
  if (s == "carry_over") return InitPolicy::carry_over;
  throw ConfigError("unknown init policy '" + s + "'");
}

/// The configuration actually used, defaults resolved.
inline nlohmann::ordered_json effective_config_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["scenario"] = cfg.scenario;
  std::vector<std::string> labels;
  for (const auto& e : cfg.estimators) labels.push_back(e.label());
  j["estimators"] = labels;
  j["runs"] = cfg.n_runs;
  j["horizon"] = effective_horizon(cfg);
  j["seed"] = cfg.base_seed;
  j["svgd_step"] = cfg.svgd_step;
  j["svgd_iters"] = cfg.svgd_iters;
  j["init_policy"] = to_string(cfg.init_policy);
  j["step_policy"] = to_string(effective_svgd(cfg).step_policy);
  return j;
}

/// Applies the keys present in a config file on top of `cfg`. Unknown keys are errors.
inline void apply_config_json(RunConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "scenario") {
        cfg.scenario = value.get<std::string>();
      } else if (key == "estimators") {
        cfg.estimators.clear();
        if (value.is_string()) {
          cfg.estimators = parse_estimator_list(value.get<std::string>());
        } else {
          for (const auto& e : value) cfg.estimators.push_back(parse_estimator(e.get<std::string>()));
        }
      } else if (key == "runs") {
        cfg.n_runs = value.get<int>();
      } else if (key == "horizon") {
        cfg.horizon = value.get<int>();
      } else if (key == "seed") {
        cfg.base_seed = value.get<std::uint64_t>();
      } else if (key == "jobs") {
        cfg.jobs = value.get<int>();
      } else if (key == "out") {
        cfg.out_dir = value.get<std::string>();
      } else if (key == "svgd_step") {
        cfg.svgd_step = value.get<double>();
      } else if (key == "svgd_iters") {
        cfg.svgd_iters = value.get<int>();
      } else if (key == "init_policy") {
        cfg.init_policy = parse_init_policy(value.get<std::string>());
      } else if (key == "step_policy") {
        cfg.step_policy = parse_step_policy(value.get<std::string>());
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

inline RunConfig load_config_file(const fs::path& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  apply_config_json(base, j);
  return base;
}

/// Writes summary.csv, runs.csv, metrics.csv, timing.csv, failures.csv, config.json and
/// (when retained) trajectories/<run>/<estimator>.csv. Everything except timing.csv is a
/// pure function of the configuration.
inline void export_results(const RunResult& result, const fs::path& dir) {
  ensure_writable(dir);
  {
    detail::CsvWriter w(dir / "summary.csv");
    w.cell("estimator").cell("N_s").cell("mean_rmse").cell("std_rmse").cell("n_diverged").cell("n_failed");
    w.end_row();
    for (const auto& s : result.summaries) {
      w.cell(s.estimator).cell(s.num_particles).cell(s.mean_rmse).cell(s.std_rmse).cell(s.n_diverged).cell(s.n_failed);
      w.end_row();
    }
    w.close();
  }
  {
    detail::CsvWriter w(dir / "runs.csv");
    w.cell("run_id").cell("estimator").cell("rmse").cell("seed").cell("diverged").cell("failed");
    w.end_row();
    for (const auto& r : result.records) {
      w.cell(r.run_id).cell(r.estimator).cell(r.rmse).cell(static_cast<unsigned long long>(r.seed));
      w.cell(r.diverged ? 1 : 0).cell(r.failed ? 1 : 0);
      w.end_row();
    }
    w.close();
  }
  {
    detail::CsvWriter w(dir / "metrics.csv");
    w.cell("run_id").cell("estimator").cell("metric").cell("value");
    w.end_row();
    for (const auto& r : result.records) {
      for (const auto& [name, value] : r.extra) {
        w.cell(r.run_id).cell(r.estimator).cell(name).cell(value);
        w.end_row();
      }
    }
    w.close();
  }
  {
    detail::CsvWriter w(dir / "timing.csv");
    w.cell("run_id").cell("estimator").cell("wall_ms");
    w.end_row();
    for (const auto& r : result.records) {
      w.cell(r.run_id).cell(r.estimator).cell(r.wall_ms);
      w.end_row();
    }
    w.close();
  }
  {
    detail::CsvWriter w(dir / "failures.csv");
    w.cell("run_id").cell("estimator").cell("message");
    w.end_row();
    for (const auto& r : result.records) {
      if (!r.failed) continue;
      std::string msg = r.message;
      for (char& c : msg) {
        if (c == '"') c = '\'';
        if (c == '\n') c = ' ';
      }
      w.cell(r.run_id).cell(r.estimator).cell("\"" + msg + "\"");
      w.end_row();
    }
    w.close();
  }
  {
    std::ofstream f(dir / "config.json", std::ios::binary);
    if (!f) throw IoError("cannot write config.json");
    f << effective_config_json(result.config).dump(2) << '\n';
  }
  if (!result.config.keep_trajectories) return;
  for (const auto& run : result.runs) {
    const fs::path rdir = dir / "trajectories" / std::to_string(run.run_id);
    ensure_writable(rdir);
    auto write_rows = [](const fs::path& path, const std::vector<Row>& rows) {
      detail::CsvWriter w(path);
      w.cell("t");
      detail::write_state_header(w, "", rows.empty() ? 0 : rows.front().size());
      w.end_row();
      for (std::size_t t = 0; t < rows.size(); ++t) {
        w.cell(static_cast<int>(t));
        for (double v : rows[t]) w.cell(v);
        w.end_row();
      }
      w.close();
    };
    write_rows(rdir / "truth.csv", run.truth);
    for (std::size_t e = 0; e < result.config.estimators.size(); ++e) {
      const auto& rec = result.at(run.run_id, e);
      if (rec.failed || rec.trajectory.empty()) continue;
      write_rows(rdir / (file_label(rec.estimator) + ".csv"), rec.trajectory);
    }
  }
}

/// Reads a trajectory CSV written by export_results back into rows (t column dropped).
inline std::vector<Row> read_trajectory_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    Row row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Figure data for one run: truth_vs_estimates.csv (t, truth, every estimator, blocked
/// flag) and clouds_<estimator>.csv (t, particle, state) for the requested steps. Steps
/// outside 1..T are skipped.
inline void emit_plot_data(const RunResult& result, int run_id, const fs::path& dir, std::span<const int> cloud_steps) {
  ensure_writable(dir);
  const auto& run = result.runs.at(static_cast<std::size_t>(run_id));
  const std::size_t dim = run.truth.empty() ? 0 : run.truth.front().size();
  const std::size_t n_est = result.config.estimators.size();
  detail::CsvWriter w(dir / "truth_vs_estimates.csv");
  w.cell("t");
  detail::write_state_header(w, "truth_", dim);
  for (std::size_t e = 0; e < n_est; ++e) {
    detail::write_state_header(w, file_label(result.config.estimators[e].label()) + "_", dim);
  }
  w.cell("blocked");
  w.end_row();
  for (std::size_t t = 0; t < run.truth.size(); ++t) {
    w.cell(static_cast<int>(t));
    for (double v : run.truth[t]) w.cell(v);
    for (std::size_t e = 0; e < n_est; ++e) {
      const auto& rec = result.at(run_id, e);
      for (std::size_t c = 0; c < dim; ++c) {
        w.cell(t < rec.trajectory.size() ? rec.trajectory[t][c] : std::nan(""));
      }
    }
    const bool blocked = t >= 1 && t - 1 < run.blocked.size() && run.blocked[t - 1] != 0;
    w.cell(blocked ? 1 : 0);
    w.end_row();
  }
  w.close();

  for (std::size_t e = 0; e < n_est; ++e) {
    const auto& rec = result.at(run_id, e);
    if (rec.clouds.empty()) continue;
    detail::CsvWriter cw(dir / ("clouds_" + file_label(rec.estimator) + ".csv"));
    cw.cell("t").cell("particle");
    detail::write_state_header(cw, "", dim);
    cw.end_row();
    for (int t : cloud_steps) {
      if (t < 1 || static_cast<std::size_t>(t) > rec.clouds.size()) continue;
      const auto& cloud = rec.clouds[static_cast<std::size_t>(t - 1)];
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        cw.cell(t).cell(static_cast<int>(i));
        for (double v : cloud[i]) cw.cell(v);
        cw.end_row();
      }
    }
    cw.close();
  }
}

/// Dataset CSV: t, truth components, observation components and one validity bit per
/// observation component. Row t = 0 carries the initial state and empty observation cells.
template <class M>
void write_dataset_csv(const ScenarioDataset<M>& ds, const fs::path& path) {
  detail::CsvWriter w(path);
  const auto dim = static_cast<std::size_t>(ds.x0.size());
  const std::size_t nz = ds.observations.empty() ? 0 : static_cast<std::size_t>(ds.observations.front().size());
  w.cell("t");
  detail::write_state_header(w, "truth_", dim);
  for (std::size_t k = 0; k < nz; ++k) w.cell("z" + std::to_string(k));
  for (std::size_t k = 0; k < nz; ++k) w.cell("valid" + std::to_string(k));
  w.end_row();
  for (std::size_t t = 0; t < ds.truth.states.size(); ++t) {
    w.cell(static_cast<int>(t));
    for (std::size_t c = 0; c < dim; ++c) w.cell(ds.truth.states[t][static_cast<Eigen::Index>(c)]);
    for (std::size_t k = 0; k < 2 * nz; ++k) {
      if (t == 0) {
        w.cell(std::string());
        continue;
      }
      const auto& z = ds.observations[t - 1];
      if (k < nz) {
        w.cell(z.values[static_cast<Eigen::Index>(k)]);
      } else {
        w.cell(z.is_valid(static_cast<Eigen::Index>(k - nz)) ? 1 : 0);
      }
    }
    w.end_row();
  }
  w.close();
}

}  // namespace steinmap
