#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "steinmap/errors.hpp"
#include "steinmap/gaussian.hpp"
#include "steinmap/random.hpp"
#include "steinmap/scenarios/dataset.hpp"

namespace steinmap {

/// Range-only localization with a zero-velocity (random walk) motion model. Each anchor
/// contributes one independent range; masked anchors are left out of the product.
struct RangeOnlyModel {
  using State = Eigen::Vector2d;

  std::vector<Eigen::Vector2d> anchors;
  State q = State::Constant(0.1 * 0.1);
  double range_var = 0.5 * 0.5;

  int state_dim() const { return 2; }
  int obs_dim() const { return static_cast<int>(anchors.size()); }
  std::span<const int> angular_components() const { return {}; }
  std::span<const int> angular_obs_components() const { return {}; }

  State transition_mean(int, const State& xp) const { return xp; }
  Eigen::MatrixXd transition_jacobian(int, const State&) const { return Eigen::MatrixXd::Identity(2, 2); }
  State process_var() const { return q; }
  double transition_logpdf(int, const State& xp, const State& x) const { return gaussian_logpdf(x, xp, q); }
  State transition_grad(int, const State& xp, const State& x) const { return -(x - xp).cwiseQuotient(q); }
  State transition_sample(int, const State& xp, Rng& rng) const {
    return State(xp[0] + std::sqrt(q[0]) * standard_normal(rng), xp[1] + std::sqrt(q[1]) * standard_normal(rng));
  }

  double likelihood_logpdf(const State& x, const Observation& z) const {
    double acc = 0.0;
    for (std::size_t l = 0; l < anchors.size(); ++l) {
      if (!z.is_valid(static_cast<Eigen::Index>(l))) continue;
      acc += gaussian_logpdf_1d(z.values[static_cast<Eigen::Index>(l)], (x - anchors[l]).norm(), range_var);
    }
    return acc;
  }
  State likelihood_grad(const State& x, const Observation& z) const {
    State g = State::Zero();
    for (std::size_t l = 0; l < anchors.size(); ++l) {
      if (!z.is_valid(static_cast<Eigen::Index>(l))) continue;
      const State d = x - anchors[l];
      const double r = d.norm();
      g += ((z.values[static_cast<Eigen::Index>(l)] - r) / (range_var * r)) * d;
    }
    return g;
  }

  Eigen::VectorXd observation_mean(const State& x, const Observation&) const {
    Eigen::VectorXd h(static_cast<Eigen::Index>(anchors.size()));
    for (std::size_t l = 0; l < anchors.size(); ++l) h[static_cast<Eigen::Index>(l)] = (x - anchors[l]).norm();
    return h;
  }
  Eigen::MatrixXd observation_jacobian(const State& x, const Observation&) const {
    Eigen::MatrixXd H(static_cast<Eigen::Index>(anchors.size()), 2);
    for (std::size_t l = 0; l < anchors.size(); ++l) {
      const State d = x - anchors[l];
      H.row(static_cast<Eigen::Index>(l)) = (d / d.norm()).transpose();
    }
    return H;
  }
  Eigen::VectorXd obs_var() const { return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(anchors.size()), range_var); }
};

struct BlockingWindow {
  int anchor = 0;
  int start = 1;  // first blocked step
  int end = 1;    // one past the last blocked step
};

struct AnchorMap {
  std::vector<Eigen::Vector2d> anchors;
  std::vector<BlockingWindow> blocking_schedule;

  bool blocked(int anchor, int t) const {
    for (const auto& w : blocking_schedule) {
      if (w.anchor == anchor && t >= w.start && t < w.end) return true;
    }
    return false;
  }

  /// Throws unless every window lies in [1, T] and two anchors remain at every step.
  void validate(int T) const {
    for (const auto& w : blocking_schedule) {
      if (w.anchor < 0 || w.anchor >= static_cast<int>(anchors.size()) || w.start < 1 || w.end <= w.start ||
          w.end > T + 1) {
        throw ContractViolation("AnchorMap: blocking window outside the horizon");
      }
    }
    for (int t = 1; t <= T; ++t) {
      int open = 0;
      for (int a = 0; a < static_cast<int>(anchors.size()); ++a) open += blocked(a, t) ? 0 : 1;
      if (open < 2) throw ContractViolation("AnchorMap: fewer than two anchors available at t=" + std::to_string(t));
    }
  }
};

inline constexpr double kArenaSize = 8.0;
inline constexpr int kScenarioCSteps = 1145;

/// Anchors at three corners of the 8 m arena. Anchor 0 is blocked in six windows of
/// 2.5, 5.0, 4.0, 4.0, 3.0 and 3.5 s at 10 Hz; windows past the horizon are dropped.
inline AnchorMap default_anchor_map(int T = kScenarioCSteps) {
  AnchorMap map;
  map.anchors = {{0.0, 0.0}, {kArenaSize, 0.0}, {0.0, kArenaSize}};
  const int starts[] = {300, 530, 790, 860, 940, 1030};
  const int lengths[] = {25, 50, 40, 40, 30, 35};
  for (int k = 0; k < 6; ++k) {
    if (starts[k] + lengths[k] <= T + 1) map.blocking_schedule.push_back({0, starts[k], starts[k] + lengths[k]});
  }
  return map;
}

/// Smooth Lissajous reference path inside the arena, sampled at 10 Hz.
inline Eigen::Vector2d reference_path(int t) {
  const double s = 0.1 * static_cast<double>(t);
  return {4.0 + 2.5 * std::sin(kTwoPi * s / 40.0), 4.0 + 2.5 * std::sin(kTwoPi * s / 30.0 + 0.6)};
}

inline ScenarioDataset<RangeOnlyModel> gen_scenario_c(std::uint64_t seed, int T, const AnchorMap& map) {
  if (T < 1) throw ContractViolation("gen_scenario_c: T must be >= 1");
  map.validate(T);
  ScenarioDataset<RangeOnlyModel> ds;
  ds.scenario = "C";
  ds.seed = seed;
  ds.model.anchors = map.anchors;
  ds.params = {{"dt", 0.1}, {"alpha", 1.0}, {"range_sd", 0.5}, {"T", static_cast<double>(T)}};
  Rng rng(seed);
  ds.x0 = reference_path(0);
  ds.initial_var = Eigen::Vector2d::Constant(0.01);
  ds.truth.states.push_back(ds.x0);
  const double sd = std::sqrt(ds.model.range_var);
  for (int t = 1; t <= T; ++t) {
    const Eigen::Vector2d x = reference_path(t);
    if (x.minCoeff() < 0.0 || x.maxCoeff() > kArenaSize) {
      ds.warnings.push_back("reference path leaves the arena at t=" + std::to_string(t));
    }
    Observation z;
    z.time_index = t;
    z.values.resize(static_cast<Eigen::Index>(map.anchors.size()));
    z.valid.assign(map.anchors.size(), 1);
    bool any_blocked = false;
    for (std::size_t l = 0; l < map.anchors.size(); ++l) {
      z.values[static_cast<Eigen::Index>(l)] = (x - map.anchors[l]).norm() + sd * standard_normal(rng);
      if (map.blocked(static_cast<int>(l), t)) {
        z.valid[l] = 0;
        any_blocked = true;
      }
    }
    ds.truth.states.push_back(x);
    ds.observations.push_back(std::move(z));
    ds.blocked.push_back(any_blocked ? 1 : 0);
  }
  return ds;
}

inline ScenarioDataset<RangeOnlyModel> gen_scenario_c(std::uint64_t seed, int T) {
  return gen_scenario_c(seed, T, default_anchor_map(T));
}

}  // namespace steinmap
