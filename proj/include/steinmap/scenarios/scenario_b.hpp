#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "steinmap/errors.hpp"
#include "steinmap/gaussian.hpp"
#include "steinmap/random.hpp"
#include "steinmap/scenarios/dataset.hpp"

namespace steinmap {

struct Control {
  double v = 0.0;      // m/s
  double omega = 0.0;  // rad/s
};

/// Unicycle pose (x, y, theta) on SE(2) with range/bearing measurements of one of several
/// landmarks whose identity is unknown; the likelihood is the equal-weight mixture over
/// landmarks.
struct UnicycleLandmarkModel {
  using State = Eigen::Vector3d;

  std::vector<Control> controls;  // controls[t - 1] drives the transition into x_t
  std::vector<Eigen::Vector2d> landmarks;
  double dt = 0.1;
  Eigen::Vector3d q = Eigen::Vector3d(0.05 * 0.1 * 0.05 * 0.1, 0.05 * 0.1 * 0.05 * 0.1, 0.035 * 0.1 * 0.035 * 0.1);
  double range_var = 1.0;
  double bearing_var = 0.17 * 0.17;

  static constexpr std::array<int, 1> kAngular{2};
  static constexpr std::array<int, 1> kAngularObs{1};

  int state_dim() const { return 3; }
  int obs_dim() const { return 2; }
  std::span<const int> angular_components() const { return kAngular; }
  std::span<const int> angular_obs_components() const { return kAngularObs; }

  Control control(int t) const {
    if (controls.empty()) return {};
    const std::size_t i = static_cast<std::size_t>(std::max(t, 1) - 1);
    return controls[std::min(i, controls.size() - 1)];
  }

  State transition_mean(int t, const State& xp) const {
    const Control u = control(t);
    const double th = xp[2] + u.omega * dt;
    return State(xp[0] + u.v * dt * std::cos(th), xp[1] + u.v * dt * std::sin(th), wrap_angle(th));
  }
  Eigen::MatrixXd transition_jacobian(int t, const State& xp) const {
    const Control u = control(t);
    const double th = xp[2] + u.omega * dt;
    Eigen::MatrixXd F = Eigen::MatrixXd::Identity(3, 3);
    F(0, 2) = -u.v * dt * std::sin(th);
    F(1, 2) = u.v * dt * std::cos(th);
    return F;
  }
  State process_var() const { return q; }
  State residual(int t, const State& xp, const State& x) const {
    State d = x - transition_mean(t, xp);
    d[2] = wrap_angle(d[2]);
    return d;
  }
  double transition_logpdf(int t, const State& xp, const State& x) const {
    const State d = residual(t, xp, x);
    return gaussian_logpdf(d, State::Zero(), q);
  }
  State transition_grad(int t, const State& xp, const State& x) const { return -residual(t, xp, x).cwiseQuotient(q); }
  State transition_sample(int t, const State& xp, Rng& rng) const {
    State x = transition_mean(t, xp);
    for (int i = 0; i < 3; ++i) x[i] += std::sqrt(q[i]) * standard_normal(rng);
    x[2] = wrap_angle(x[2]);
    return x;
  }

  /// Range and bearing (of the robot seen from the landmark) for landmark l.
  Eigen::Vector2d measure(const State& x, std::size_t l) const {
    const double dx = x[0] - landmarks[l][0];
    const double dy = x[1] - landmarks[l][1];
    return {std::hypot(dx, dy), std::atan2(dy, dx)};
  }

  double component_logpdf(const State& x, const Observation& z, std::size_t l) const {
    const Eigen::Vector2d h = measure(x, l);
    double acc = 0.0;
    if (z.is_valid(0)) acc += gaussian_logpdf_1d(z.values[0], h[0], range_var);
    if (z.is_valid(1)) acc += gaussian_logpdf_1d(wrap_angle(z.values[1] - h[1]), 0.0, bearing_var);
    return acc;
  }

  State component_grad(const State& x, const Observation& z, std::size_t l) const {
    const double dx = x[0] - landmarks[l][0];
    const double dy = x[1] - landmarks[l][1];
    const double r2 = dx * dx + dy * dy;
    const double r = std::sqrt(r2);
    State g = State::Zero();
    if (z.is_valid(0)) {
      const double w = (z.values[0] - r) / range_var;
      g[0] += w * dx / r;
      g[1] += w * dy / r;
    }
    if (z.is_valid(1)) {
      const double w = wrap_angle(z.values[1] - std::atan2(dy, dx)) / bearing_var;
      g[0] += w * (-dy / r2);
      g[1] += w * (dx / r2);
    }
    return g;
  }

  /// Posterior landmark probabilities p(l | z, x) under the uniform association prior.
  std::vector<double> responsibilities(const State& x, const Observation& z) const {
    std::vector<double> lp(landmarks.size());
    for (std::size_t l = 0; l < landmarks.size(); ++l) lp[l] = component_logpdf(x, z, l);
    const double lse = log_sum_exp(lp);
    for (double& v : lp) v = std::exp(v - lse);
    return lp;
  }

  double likelihood_logpdf(const State& x, const Observation& z) const {
    std::array<double, 16> lp{};
    const std::size_t n = landmarks.size();
    for (std::size_t l = 0; l < n; ++l) lp[l] = component_logpdf(x, z, l);
    return log_sum_exp(std::span<const double>(lp.data(), n)) - std::log(static_cast<double>(n));
  }

  State likelihood_grad(const State& x, const Observation& z) const {
    std::array<double, 16> lp{};
    const std::size_t n = landmarks.size();
    for (std::size_t l = 0; l < n; ++l) lp[l] = component_logpdf(x, z, l);
    const double lse = log_sum_exp(std::span<const double>(lp.data(), n));
    State g = State::Zero();
    for (std::size_t l = 0; l < n; ++l) {
      const double resp = std::exp(lp[l] - lse);
      if (resp > 0.0) g += resp * component_grad(x, z, l);
    }
    return g;
  }

  /// Landmark the linearizing estimators associate z with: the most likely one at x.
  std::size_t most_likely_landmark(const State& x, const Observation& z) const {
    std::size_t best = 0;
    double best_lp = kNegInf;
    for (std::size_t l = 0; l < landmarks.size(); ++l) {
      const double lp = component_logpdf(x, z, l);
      if (lp > best_lp) {
        best_lp = lp;
        best = l;
      }
    }
    return best;
  }

  Eigen::VectorXd observation_mean(const State& x, const Observation& z) const {
    return measure(x, most_likely_landmark(x, z));
  }
  Eigen::MatrixXd observation_jacobian(const State& x, const Observation& z) const {
    const auto& lm = landmarks[most_likely_landmark(x, z)];
    const double dx = x[0] - lm[0];
    const double dy = x[1] - lm[1];
    const double r2 = dx * dx + dy * dy;
    const double r = std::sqrt(r2);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, 3);
    H(0, 0) = dx / r;
    H(0, 1) = dy / r;
    H(1, 0) = -dy / r2;
    H(1, 1) = dx / r2;
    return H;
  }
  Eigen::VectorXd obs_var() const { return Eigen::Vector2d(range_var, bearing_var); }
};

/// Figure-eight schedule: a full left circle followed by a full right circle, repeated.
inline std::vector<Control> figure_eight_controls(int T, double speed = 0.5, int steps_per_loop = 630, double dt = 0.1) {
  std::vector<Control> u(static_cast<std::size_t>(T));
  const int half = steps_per_loop / 2;
  const double omega = kTwoPi / (half * dt);
  for (int t = 0; t < T; ++t) {
    const bool left = (t % steps_per_loop) < half;
    u[static_cast<std::size_t>(t)] = {speed, left ? omega : -omega};
  }
  return u;
}

/// Four landmarks at the corners of a 10 m square centred on the figure-eight crossing.
inline std::vector<Eigen::Vector2d> square_landmarks(double half_side = 5.0) {
  return {{half_side, half_side}, {-half_side, half_side}, {-half_side, -half_side}, {half_side, -half_side}};
}

inline ScenarioDataset<UnicycleLandmarkModel> gen_scenario_b(std::uint64_t seed, int T) {
  if (T < 1) throw ContractViolation("gen_scenario_b: T must be >= 1");
  using State = UnicycleLandmarkModel::State;
  ScenarioDataset<UnicycleLandmarkModel> ds;
  ds.scenario = "B";
  ds.seed = seed;
  ds.model.controls = figure_eight_controls(T);
  ds.model.landmarks = square_landmarks();
  const State sigma0(0.2 * 0.2, 0.2 * 0.2, 0.035 * 0.035);
  ds.params = {{"dt", 0.1}, {"alpha_xy", 0.05}, {"alpha_theta", 0.035}, {"range_sd", 1.0},
               {"bearing_sd", 0.17}, {"speed", 0.5}, {"steps_per_loop", 630}, {"T", static_cast<double>(T)}};
  Rng rng(seed);
  State x0 = State::Zero();
  for (int i = 0; i < 3; ++i) x0[i] += std::sqrt(sigma0[i]) * standard_normal(rng);
  x0[2] = wrap_angle(x0[2]);
  ds.x0 = x0;
  ds.initial_var = sigma0;
  ds.truth.states.push_back(x0);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(ds.model.landmarks.size()) - 1);
  for (int t = 1; t <= T; ++t) {
    const State x = ds.model.transition_sample(t, ds.truth.states.back(), rng);
    const int l = pick(rng);
    const Eigen::Vector2d h = ds.model.measure(x, static_cast<std::size_t>(l));
    Observation z;
    z.time_index = t;
    z.values = Eigen::Vector2d(h[0] + std::sqrt(ds.model.range_var) * standard_normal(rng),
                               wrap_angle(h[1] + std::sqrt(ds.model.bearing_var) * standard_normal(rng)));
    ds.truth.states.push_back(x);
    ds.observations.push_back(std::move(z));
    ds.association.push_back(l);
  }
  return ds;
}

}  // namespace steinmap
