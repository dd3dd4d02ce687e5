#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "steinmap/errors.hpp"
#include "steinmap/kernel.hpp"
#include "steinmap/model.hpp"
#include "steinmap/random.hpp"
#include "steinmap/types.hpp"

namespace steinmap {

template <class State>
struct ParticleSet {
  std::vector<State> particles;
  int time_index = 0;

  std::size_t size() const { return particles.size(); }
};

enum class BandwidthPolicy { fixed, median_heuristic };

struct KernelSpec {
  BandwidthPolicy policy = BandwidthPolicy::median_heuristic;
  double fixed_bandwidth = 1.0;
};

/// Where particles for time t start before the SVGD iterations.
enum class InitPolicy {
  propagate_sample,  ///< one transition draw from each previous particle
  propagate_mean,    ///< transition mean of each previous particle
  carry_over,        ///< previous particle copied as is
};

/// How the step size scales the SVGD direction. `adagrad` follows the reference SVGD
/// implementation: per-component history h <- a h + (1 - a) phi^2, step eps phi / (fudge + sqrt(h)).
enum class StepPolicy { constant, adagrad };

struct SvgdConfig {
  double step_size = 1e-3;
  StepPolicy step_policy = StepPolicy::constant;
  double adagrad_decay = 0.9;
  double adagrad_fudge = 1e-6;
  int iterations = 1000;
  int num_particles = 10;
  KernelSpec kernel;
  InitPolicy init_policy = InitPolicy::propagate_sample;
  /// Variance of the concentrated Gaussian the t = 1 particles are drawn around x0 with.
  double initial_spread = 0.01;
};

namespace detail {

template <class Vec>
bool lex_less(const Vec& a, const Vec& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (b[i] < a[i]) return false;
  }
  return false;
}

/// Summation order that depends only on particle values, so a permuted input sums its
/// terms in the same order and the update is permutation-equivariant bit for bit.
template <class Vec>
std::vector<std::size_t> canonical_order(std::span<const Vec> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lex_less(xs[a], xs[b]); });
  return order;
}

template <class Vec>
std::vector<Vec> canonical_copy(std::span<const Vec> xs) {
  std::vector<Vec> out;
  out.reserve(xs.size());
  for (std::size_t i : canonical_order(xs)) out.push_back(xs[i]);
  return out;
}

template <class Vec>
void require_finite(const Vec& v, std::size_t particle, const char* what) {
  for (Eigen::Index c = 0; c < v.size(); ++c) {
    if (!std::isfinite(v[c])) {
      throw NumericalError(std::string(what) + " is not finite at particle " + std::to_string(particle),
                           static_cast<std::ptrdiff_t>(particle));
    }
  }
}

}  // namespace detail

template <class Vec>
double effective_bandwidth(std::span<const Vec> xs, const KernelSpec& kernel, std::span<const int> angular) {
  if (kernel.policy == BandwidthPolicy::fixed) return kernel.fixed_bandwidth;
  return median_bandwidth<Vec>(xs, angular);
}

/// SVGD directions phi(x_i) = 1/N sum_k [k(x_i, x_k) s_k + grad_{x_k} k(x_i, x_k)] for
/// precomputed scores s_k, all evaluated at the current (pre-update) positions.
template <class Vec>
std::vector<Vec> svgd_directions(std::span<const Vec> xs, std::span<const Vec> scores, double h,
                                 std::span<const int> angular = {}) {
  const std::size_t n = xs.size();
  const auto order = detail::canonical_order(xs);
  std::vector<Vec> phi(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec acc = Vec::Zero(xs[i].size());
    for (std::size_t k : order) {
      const Vec d = angular_difference(xs[i], xs[k], angular);
      const double kv = std::exp(-d.squaredNorm() / h);
      acc += kv * scores[k];
      acc += ((2.0 / h) * kv) * d;
    }
    phi[i] = acc * inv_n;
  }
  return phi;
}

namespace detail {

template <class Vec, class Score>
std::vector<Vec> directions_at(const ParticleSet<Vec>& ps, Score& score, const SvgdConfig& cfg,
                               std::span<const int> angular) {
  const std::span<const Vec> xs(ps.particles);
  std::vector<Vec> scores(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    scores[k] = score(xs[k]);
    require_finite(scores[k], k, "score");
  }
  const double h = effective_bandwidth(xs, cfg.kernel, angular);
  return svgd_directions<Vec>(xs, scores, h, angular);
}

}  // namespace detail

/// One synchronous SVGD update x_i <- x_i + eps * phi(x_i) with a constant step.
template <class Vec, class Score>
ParticleSet<Vec> svgd_step(const ParticleSet<Vec>& ps, Score&& score, const SvgdConfig& cfg,
                           std::span<const int> angular = {}) {
  const auto phi = detail::directions_at(ps, score, cfg, angular);
  ParticleSet<Vec> out{ps.particles, ps.time_index};
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.particles[i] += cfg.step_size * phi[i];
    wrap_components(out.particles[i], angular);
  }
  return out;
}

template <class Vec, class Score>
ParticleSet<Vec> svgd_run(ParticleSet<Vec> ps, Score&& score, const SvgdConfig& cfg, std::span<const int> angular = {}) {
  if (cfg.step_policy == StepPolicy::constant) {
    for (int l = 0; l < cfg.iterations; ++l) ps = svgd_step(ps, score, cfg, angular);
    return ps;
  }
  std::vector<Vec> history;
  for (int l = 0; l < cfg.iterations; ++l) {
    const auto phi = detail::directions_at(ps, score, cfg, angular);
    if (l == 0) {
      history.reserve(phi.size());
      for (const Vec& p : phi) history.push_back(Vec(p.array().square()));
    } else {
      for (std::size_t i = 0; i < phi.size(); ++i) {
        history[i] = cfg.adagrad_decay * history[i] + (1.0 - cfg.adagrad_decay) * Vec(phi[i].array().square());
      }
    }
    for (std::size_t i = 0; i < phi.size(); ++i) {
      const Vec adj = phi[i].array() / (cfg.adagrad_fudge + history[i].array().sqrt());
      ps.particles[i] += cfg.step_size * adj;
      wrap_components(ps.particles[i], angular);
    }
  }
  return ps;
}

/// Score of the step target p(z_t, x | x_{t-1}) averaged over the ancestor particles:
/// grad log p(z_t | x) + mean_j grad log p(x | x_{t-1}^j). The running mean is exact when
/// every ancestor is identical, so a single conditioning point and N copies of it agree.
template <StateSpaceModel M>
typename M::State conditional_score(const M& model, int t, std::span<const typename M::State> ancestors,
                                    const Observation& z, const typename M::State& x) {
  using State = typename M::State;
  State mean = model.transition_grad(t, ancestors[0], x);
  for (std::size_t j = 1; j < ancestors.size(); ++j) {
    const State g = model.transition_grad(t, ancestors[j], x);
    mean += (g - mean) / static_cast<double>(j + 1);
  }
  return State(model.likelihood_grad(x, z) + mean);
}

namespace detail {

template <StateSpaceModel M>
typename M::State initialize_from(const M& model, int t, const typename M::State& prev, InitPolicy policy, Rng& rng) {
  using State = typename M::State;
  State x;
  switch (policy) {
    case InitPolicy::propagate_sample:
      x = model.transition_sample(t, prev, rng);
      break;
    case InitPolicy::propagate_mean:
      if constexpr (requires { model.transition_mean(t, prev); }) {
        x = model.transition_mean(t, prev);
      } else {
        throw ContractViolation("propagate_mean requires a model with transition_mean");
      }
      break;
    case InitPolicy::carry_over:
      x = prev;
      break;
  }
  wrap_components(x, model.angular_components());
  return x;
}

template <StateSpaceModel M>
ParticleSet<typename M::State> conditional_svgd(const M& model, ParticleSet<typename M::State> ps,
                                                std::span<const typename M::State> ancestors, const Observation& z,
                                                const SvgdConfig& cfg) {
  const int t = ps.time_index;
  auto score = [&](const typename M::State& x) { return conditional_score(model, t, ancestors, z, x); };
  return svgd_run(std::move(ps), score, cfg, model.angular_components());
}

}  // namespace detail

/// Particles for t = 1: drawn around the known x0, moved to their initial positions by the
/// init policy, then driven by SVGD toward p(z_1, x_1 | x0).
template <StateSpaceModel M>
ParticleSet<typename M::State> initial_particle_update(const Observation& z1, const typename M::State& x0, const M& model,
                                                       const SvgdConfig& cfg, Rng& rng) {
  using State = typename M::State;
  if (cfg.num_particles < 1) throw ContractViolation("num_particles must be >= 1");
  if (x0.size() != model.state_dim()) throw ContractViolation("x0 dimension does not match the model");
  const double sd = std::sqrt(cfg.initial_spread);
  ParticleSet<State> ps;
  ps.time_index = 1;
  ps.particles.reserve(static_cast<std::size_t>(cfg.num_particles));
  for (int i = 0; i < cfg.num_particles; ++i) {
    State draw = x0;
    for (Eigen::Index c = 0; c < draw.size(); ++c) draw[c] += sd * standard_normal(rng);
    wrap_components(draw, model.angular_components());
    ps.particles.push_back(detail::initialize_from(model, 1, draw, cfg.init_policy, rng));
  }
  const std::vector<State> anchor{x0};
  return detail::conditional_svgd(model, std::move(ps), std::span<const State>(anchor), z1, cfg);
}

/// Particles for t > 1 from the previous set, driven by the ancestor-averaged SVGD direction.
template <StateSpaceModel M>
ParticleSet<typename M::State> sequential_particle_update(const ParticleSet<typename M::State>& prev, const Observation& z,
                                                          const M& model, const SvgdConfig& cfg, Rng& rng) {
  using State = typename M::State;
  if (prev.size() == 0) throw ContractViolation("previous particle set is empty");
  ParticleSet<State> ps;
  ps.time_index = prev.time_index + 1;
  ps.particles.reserve(prev.size());
  for (const State& xp : prev.particles) {
    ps.particles.push_back(detail::initialize_from(model, ps.time_index, xp, cfg.init_policy, rng));
  }
  const auto ancestors = detail::canonical_copy(std::span<const State>(prev.particles));
  return detail::conditional_svgd(model, std::move(ps), std::span<const State>(ancestors), z, cfg);
}

}  // namespace steinmap
