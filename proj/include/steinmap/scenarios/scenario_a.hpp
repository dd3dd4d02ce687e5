#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include <Eigen/Core>

#include "steinmap/errors.hpp"
#include "steinmap/gaussian.hpp"
#include "steinmap/random.hpp"
#include "steinmap/scenarios/dataset.hpp"

namespace steinmap {

/// Univariate nonlinear growth model with a squared observation:
///   x_t = 0.9 x + 10 x / (1 + x^2) + 8 cos(1.2 (t - 1)) + v,  v ~ N(0, 5)
///   z_t = 0.05 x_t^2 + r,                                      r ~ N(0, 10)
/// The observation cannot tell +x from -x.
struct UngmModel {
  using State = Eigen::Matrix<double, 1, 1>;

  double process_variance = 5.0;
  double obs_variance = 10.0;

  int state_dim() const { return 1; }
  int obs_dim() const { return 1; }
  std::span<const int> angular_components() const { return {}; }
  std::span<const int> angular_obs_components() const { return {}; }

  static double drift(int t, double xp) {
    return 0.9 * xp + 10.0 * xp / (1.0 + xp * xp) + 8.0 * std::cos(1.2 * static_cast<double>(t - 1));
  }

  State transition_mean(int t, const State& xp) const { return State(drift(t, xp[0])); }
  Eigen::MatrixXd transition_jacobian(int, const State& xp) const {
    const double x = xp[0];
    const double d = 1.0 + x * x;
    return Eigen::MatrixXd::Constant(1, 1, 0.9 + 10.0 * (1.0 - x * x) / (d * d));
  }
  State process_var() const { return State(process_variance); }
  double transition_logpdf(int t, const State& xp, const State& x) const {
    return gaussian_logpdf_1d(x[0], drift(t, xp[0]), process_variance);
  }
  State transition_grad(int t, const State& xp, const State& x) const {
    return State(-(x[0] - drift(t, xp[0])) / process_variance);
  }
  State transition_sample(int t, const State& xp, Rng& rng) const {
    return State(drift(t, xp[0]) + std::sqrt(process_variance) * standard_normal(rng));
  }

  Eigen::VectorXd observation_mean(const State& x, const Observation&) const {
    return Eigen::VectorXd::Constant(1, 0.05 * x[0] * x[0]);
  }
  Eigen::MatrixXd observation_jacobian(const State& x, const Observation&) const {
    return Eigen::MatrixXd::Constant(1, 1, 0.1 * x[0]);
  }
  Eigen::VectorXd obs_var() const { return Eigen::VectorXd::Constant(1, obs_variance); }
  double likelihood_logpdf(const State& x, const Observation& z) const {
    if (!z.is_valid(0)) return 0.0;
    return gaussian_logpdf_1d(z.values[0], 0.05 * x[0] * x[0], obs_variance);
  }
  State likelihood_grad(const State& x, const Observation& z) const {
    if (!z.is_valid(0)) return State(0.0);
    return State((z.values[0] - 0.05 * x[0] * x[0]) / obs_variance * 0.1 * x[0]);
  }
};

inline ScenarioDataset<UngmModel> gen_scenario_a(std::uint64_t seed, int T) {
  if (T < 1) throw ContractViolation("gen_scenario_a: T must be >= 1");
  using State = UngmModel::State;
  ScenarioDataset<UngmModel> ds;
  ds.scenario = "A";
  ds.seed = seed;
  ds.params = {{"process_var", 5.0}, {"obs_var", 10.0}, {"x0_var", 5.0}, {"T", static_cast<double>(T)}};
  Rng rng(seed);
  ds.x0 = State(std::sqrt(5.0) * standard_normal(rng));
  ds.initial_var = State(0.01);
  ds.truth.states.push_back(ds.x0);
  for (int t = 1; t <= T; ++t) {
    const State x = ds.model.transition_sample(t, ds.truth.states.back(), rng);
    Observation z;
    z.time_index = t;
    z.values = Eigen::VectorXd::Constant(1, 0.05 * x[0] * x[0] + std::sqrt(10.0) * standard_normal(rng));
    ds.truth.states.push_back(x);
    ds.observations.push_back(std::move(z));
  }
  return ds;
}

}  // namespace steinmap
