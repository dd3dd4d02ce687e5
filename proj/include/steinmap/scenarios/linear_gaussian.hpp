#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "steinmap/gaussian.hpp"
#include "steinmap/random.hpp"
#include "steinmap/scenarios/dataset.hpp"
#include "steinmap/types.hpp"

namespace steinmap {

/// x_t = A x_{t-1} + v, z_t = C x_t + r with diagonal noise. Used as the closed-form
/// reference model in tests.
template <int N>
struct LinearGaussianModel {
  using State = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;

  Mat A = Mat::Identity();
  State q = State::Ones();
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(N, N);
  Eigen::VectorXd r = Eigen::VectorXd::Ones(N);

  int state_dim() const { return N; }
  int obs_dim() const { return static_cast<int>(C.rows()); }
  std::span<const int> angular_components() const { return {}; }
  std::span<const int> angular_obs_components() const { return {}; }

  State transition_mean(int, const State& xp) const { return A * xp; }
  Eigen::MatrixXd transition_jacobian(int, const State&) const { return A; }
  State process_var() const { return q; }
  double transition_logpdf(int t, const State& xp, const State& x) const {
    return gaussian_logpdf(x, transition_mean(t, xp), q);
  }
  State transition_grad(int t, const State& xp, const State& x) const {
    return -(x - transition_mean(t, xp)).cwiseQuotient(q);
  }
  State transition_sample(int t, const State& xp, Rng& rng) const {
    State x = transition_mean(t, xp);
    for (int i = 0; i < N; ++i) x[i] += std::sqrt(q[i]) * standard_normal(rng);
    return x;
  }

  Eigen::VectorXd observation_mean(const State& x, const Observation&) const { return C * x; }
  Eigen::MatrixXd observation_jacobian(const State&, const Observation&) const { return C; }
  Eigen::VectorXd obs_var() const { return r; }
  double likelihood_logpdf(const State& x, const Observation& z) const {
    const Eigen::VectorXd h = C * x;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      if (z.is_valid(i)) acc += gaussian_logpdf_1d(z.values[i], h[i], r[i]);
    }
    return acc;
  }
  State likelihood_grad(const State& x, const Observation& z) const {
    const Eigen::VectorXd h = C * x;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      if (z.is_valid(i)) w[i] = (z.values[i] - h[i]) / r[i];
    }
    return C.transpose() * w;
  }
};

/// 1D random walk observed directly: x_t = a x_{t-1} + N(0, q), z_t = x_t + N(0, r).
inline LinearGaussianModel<1> scalar_linear_model(double a = 1.0, double q = 1.0, double r = 1.0) {
  LinearGaussianModel<1> m;
  m.A(0, 0) = a;
  m.q[0] = q;
  m.C = Eigen::MatrixXd::Constant(1, 1, 1.0);
  m.r = Eigen::VectorXd::Constant(1, r);
  return m;
}

template <int N>
ScenarioDataset<LinearGaussianModel<N>> simulate_linear(const LinearGaussianModel<N>& model,
                                                        const typename LinearGaussianModel<N>::State& x0,
                                                        std::uint64_t seed, int T) {
  using State = typename LinearGaussianModel<N>::State;
  ScenarioDataset<LinearGaussianModel<N>> ds;
  ds.scenario = "linear";
  ds.seed = seed;
  ds.model = model;
  ds.x0 = x0;
  ds.initial_var = State::Constant(0.01);
  Rng rng(seed);
  ds.truth.states.push_back(x0);
  for (int t = 1; t <= T; ++t) {
    const State x = model.transition_sample(t, ds.truth.states.back(), rng);
    Observation z;
    z.time_index = t;
    z.values = model.C * x;
    for (Eigen::Index i = 0; i < z.size(); ++i) z.values[i] += std::sqrt(model.r[i]) * standard_normal(rng);
    ds.truth.states.push_back(x);
    ds.observations.push_back(std::move(z));
  }
  return ds;
}

/// Default "linear" benchmark scenario: scalar random walk with unit noises.
inline ScenarioDataset<LinearGaussianModel<1>> gen_scenario_linear(std::uint64_t seed, int T) {
  Eigen::Matrix<double, 1, 1> x0;
  x0 << 0.0;
  return simulate_linear(scalar_linear_model(1.0, 1.0, 1.0), x0, seed, T);
}

}  // namespace steinmap
