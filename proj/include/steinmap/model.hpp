#pragma once

#include <cmath>
#include <concepts>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "steinmap/errors.hpp"
#include "steinmap/types.hpp"

namespace steinmap {

// A state-space model x_t ~ p(x_t | x_{t-1}), z_t ~ p(z_t | x_t). The time index passed to
// the transition functions is the index of the new state x_t (t >= 1), which lets
// time-varying dynamics (forcing terms, control inputs) live inside the model.
template <class M>
concept StateSpaceModel = requires(const M& m, const typename M::State& x, const Observation& z, int t,
                                   Rng& rng) {
  { m.state_dim() } -> std::convertible_to<int>;
  { m.obs_dim() } -> std::convertible_to<int>;
  { m.transition_logpdf(t, x, x) } -> std::convertible_to<double>;
  { m.transition_grad(t, x, x) } -> std::convertible_to<typename M::State>;
  { m.transition_sample(t, x, rng) } -> std::convertible_to<typename M::State>;
  { m.likelihood_logpdf(x, z) } -> std::convertible_to<double>;
  { m.likelihood_grad(x, z) } -> std::convertible_to<typename M::State>;
  { m.angular_components() } -> std::convertible_to<std::span<const int>>;
};

// Additive-Gaussian models that also expose the means, Jacobians and diagonal noise
// variances needed by the linearization-based estimators. Observation means take the
// observation itself so models with unknown data association can pick the component to
// linearize.
template <class M>
concept DifferentiableModel =
    StateSpaceModel<M> && requires(const M& m, const typename M::State& x, const Observation& z, int t) {
      { m.transition_mean(t, x) } -> std::convertible_to<typename M::State>;
      { m.transition_jacobian(t, x) } -> std::convertible_to<Eigen::MatrixXd>;
      { m.process_var() } -> std::convertible_to<typename M::State>;
      { m.observation_mean(x, z) } -> std::convertible_to<Eigen::VectorXd>;
      { m.observation_jacobian(x, z) } -> std::convertible_to<Eigen::MatrixXd>;
      { m.obs_var() } -> std::convertible_to<Eigen::VectorXd>;
      { m.angular_obs_components() } -> std::convertible_to<std::span<const int>>;
    };

namespace detail {

template <class M>
void check_dims(const M& model, const typename M::State& x_prev, const typename M::State& x,
                const Observation& z) {
  if (x_prev.size() != model.state_dim() || x.size() != model.state_dim()) {
    throw ContractViolation("state dimension does not match the model");
  }
  if (z.size() != model.obs_dim()) throw ContractViolation("observation dimension does not match the model");
}

}  // namespace detail

/// log p(z_t, x_t | x_{t-1}) = log p(z_t | x_t) + log p(x_t | x_{t-1}).
template <StateSpaceModel M>
double log_joint_step(const M& model, int t, const typename M::State& x_prev, const typename M::State& x,
                      const Observation& z) {
  detail::check_dims(model, x_prev, x, z);
  const double value = model.likelihood_logpdf(x, z) + model.transition_logpdf(t, x_prev, x);
  if (std::isnan(value)) throw ContractViolation("log density evaluated to NaN");
  return value;
}

/// Gradient of log_joint_step with respect to x.
template <StateSpaceModel M>
typename M::State grad_log_joint_step(const M& model, int t, const typename M::State& x_prev,
                                      const typename M::State& x, const Observation& z) {
  detail::check_dims(model, x_prev, x, z);
  typename M::State g = model.likelihood_grad(x, z) + model.transition_grad(t, x_prev, x);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw NumericalError("non-finite gradient component " + std::to_string(i), i);
    }
  }
  return g;
}

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h.
template <class Vec, class F>
Vec finite_difference_grad(F&& f, const Vec& x, double h) {
  Vec g = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x;
    Vec xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fp = f(xp);
    const double fm = f(xm);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericalError("finite_difference_grad: function not finite at probe point", i);
    }
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Largest per-component discrepancy between an analytic gradient and central differences.
/// Components are compared relatively, except when the gradient norm is below 1e-2 where
/// the comparison is absolute.
struct GradientCheck {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  bool passed = true;
};

template <class Vec, class F>
GradientCheck check_gradient(F&& f, const Vec& analytic, const Vec& x, double rel_tol = 1e-5,
                             double abs_tol = 1e-7) {
  GradientCheck out;
  Vec numeric = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * (1.0 + std::abs(x[i]));
    Vec xp = x;
    Vec xm = x;
    xp[i] += h;
    xm[i] -= h;
    numeric[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  const double scale = std::max(analytic.norm(), numeric.norm());
  const double abs_err = (analytic - numeric).cwiseAbs().maxCoeff();
  out.max_abs_error = abs_err;
  out.max_rel_error = scale > 0.0 ? abs_err / scale : 0.0;
  out.passed = scale < 1e-2 ? abs_err <= abs_tol : out.max_rel_error <= rel_tol;
  return out;
}

/// A model assembled from callables. Used for test fixtures and quick prototypes; the
/// scenario models are concrete classes so the hot loops inline.
template <class StateT = Eigen::VectorXd>
struct FunctionalModel {
  using State = StateT;

  int n_x = 1;
  int n_z = 1;
  std::function<double(int, const State&, const State&)> transition_logpdf_fn;
  std::function<State(int, const State&, const State&)> transition_grad_fn;
  std::function<State(int, const State&, Rng&)> transition_sample_fn;
  std::function<double(const State&, const Observation&)> likelihood_logpdf_fn;
  std::function<State(const State&, const Observation&)> likelihood_grad_fn;
  std::vector<int> angular;

  int state_dim() const { return n_x; }
  int obs_dim() const { return n_z; }
  double transition_logpdf(int t, const State& xp, const State& x) const { return transition_logpdf_fn(t, xp, x); }
  State transition_grad(int t, const State& xp, const State& x) const { return transition_grad_fn(t, xp, x); }
  State transition_sample(int t, const State& xp, Rng& rng) const { return transition_sample_fn(t, xp, rng); }
  double likelihood_logpdf(const State& x, const Observation& z) const { return likelihood_logpdf_fn(x, z); }
  State likelihood_grad(const State& x, const Observation& z) const { return likelihood_grad_fn(x, z); }
  std::span<const int> angular_components() const { return angular; }
};

}  // namespace steinmap
