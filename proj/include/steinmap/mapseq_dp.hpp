#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "steinmap/errors.hpp"
#include "steinmap/model.hpp"
#include "steinmap/random.hpp"
#include "steinmap/svgd.hpp"
#include "steinmap/types.hpp"

namespace steinmap {

/// Per-step particle supports for t = 1..T plus the known initial state.
template <class State>
struct ParticleHistory {
  State x0;
  std::vector<ParticleSet<State>> sets;

  std::size_t horizon() const { return sets.size(); }
  std::size_t num_particles() const { return sets.empty() ? 0 : sets.front().size(); }
};

/// Accumulated scores and backpointers. Row r holds time t = r + 1; indices are 0-based and
/// row 0 of the backpointers is unused.
struct DpTables {
  std::vector<std::vector<double>> scores;
  std::vector<std::vector<int>> backpointers;
  /// (t, i) pairs where every predecessor was -inf.
  std::vector<std::pair<int, int>> dead_ends;
};

/// phi_1(i) = log p(z_1, x_1^i | x0).
template <StateSpaceModel M>
std::vector<double> init_scores(const ParticleSet<typename M::State>& ps1, const typename M::State& x0,
                                const Observation& z1, const M& model) {
  std::vector<double> phi(ps1.size());
  for (std::size_t i = 0; i < ps1.size(); ++i) phi[i] = log_joint_step(model, 1, x0, ps1.particles[i], z1);
  return phi;
}

struct ForwardStep {
  std::vector<double> scores;
  std::vector<int> backpointers;
  std::vector<int> dead_ends;
};

/// One Viterbi recursion step over particle supports. For every current particle i the
/// best predecessor j maximizes log p(z_t, x_t^i | x_{t-1}^j) + phi_{t-1}(j); the likelihood
/// term is constant in j so this is the same argmax as the transition-only form, but using
/// the full step score keeps the comparison bit-consistent with exhaustive enumeration.
/// Ties go to the lowest j.
template <StateSpaceModel M>
ForwardStep forward_step(std::span<const double> phi_prev, const ParticleSet<typename M::State>& prev,
                         const ParticleSet<typename M::State>& cur, const Observation& z, const M& model) {
  if (phi_prev.size() != prev.size()) throw ContractViolation("forward_step: score row does not match previous set");
  const int t = cur.time_index;
  ForwardStep out;
  out.scores.assign(cur.size(), kNegInf);
  out.backpointers.assign(cur.size(), 0);
  for (std::size_t i = 0; i < cur.size(); ++i) {
    const auto& xi = cur.particles[i];
    detail::check_dims(model, xi, xi, z);
    const double lik = model.likelihood_logpdf(xi, z);
    if (std::isnan(lik)) throw ContractViolation("likelihood evaluated to NaN");
    double best = kNegInf;
    int arg = -1;
    for (std::size_t j = 0; j < prev.size(); ++j) {
      const double trans = model.transition_logpdf(t, prev.particles[j], xi);
      if (std::isnan(trans)) throw ContractViolation("transition density evaluated to NaN");
      const double cand = (lik + trans) + phi_prev[j];
      if (cand > best) {
        best = cand;
        arg = static_cast<int>(j);
      }
    }
    if (arg < 0) {
      out.dead_ends.push_back(static_cast<int>(i));
      arg = 0;
    }
    out.backpointers[i] = arg;
    out.scores[i] = best;
  }
  return out;
}

/// Index of the maximum, lowest index on ties; -1 if every entry is -inf.
inline int argmax_lowest(std::span<const double> v) {
  double best = kNegInf;
  int arg = -1;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] > best) {
      best = v[i];
      arg = static_cast<int>(i);
    }
  }
  return arg;
}

template <class State>
Trajectory<State> backtrack(const DpTables& tables, const ParticleHistory<State>& hist) {
  const std::size_t T = hist.horizon();
  if (T == 0 || tables.scores.size() != T) throw ContractViolation("backtrack: tables do not cover the horizon");
  const int last = argmax_lowest(tables.scores.back());
  if (last < 0) throw DecodeFailure("no admissible path: every final score is -inf");
  Trajectory<State> traj;
  traj.indices.assign(T, 0);
  traj.indices[T - 1] = last;
  for (std::size_t r = T - 1; r > 0; --r) {
    traj.indices[r - 1] = tables.backpointers[r][static_cast<std::size_t>(traj.indices[r])];
  }
  traj.states.reserve(T + 1);
  traj.states.push_back(hist.x0);
  for (std::size_t r = 0; r < T; ++r) traj.states.push_back(hist.sets[r].particles[static_cast<std::size_t>(traj.indices[r])]);
  traj.score = tables.scores.back()[static_cast<std::size_t>(last)];
  return traj;
}

/// Forward recursion over a complete history followed by backtracking.
template <StateSpaceModel M>
std::pair<Trajectory<typename M::State>, DpTables> viterbi_decode(const ParticleHistory<typename M::State>& hist,
                                                                  std::span<const Observation> obs, const M& model) {
  if (hist.horizon() == 0 || obs.size() < hist.horizon()) throw ContractViolation("viterbi_decode: horizon mismatch");
  DpTables tables;
  tables.scores.push_back(init_scores(hist.sets[0], hist.x0, obs[0], model));
  tables.backpointers.emplace_back(hist.sets[0].size(), 0);
  for (std::size_t r = 1; r < hist.horizon(); ++r) {
    auto step = forward_step(std::span<const double>(tables.scores.back()), hist.sets[r - 1], hist.sets[r], obs[r], model);
    for (int i : step.dead_ends) tables.dead_ends.emplace_back(static_cast<int>(r + 1), i);
    tables.scores.push_back(std::move(step.scores));
    tables.backpointers.push_back(std::move(step.backpointers));
  }
  auto traj = backtrack(tables, hist);
  return {std::move(traj), std::move(tables)};
}

/// J(s) without the constant log p(x0): sum_t log p(z_t, s_t | s_{t-1}), accumulated in
/// the same order as the forward recursion.
template <StateSpaceModel M>
double trajectory_score(std::span<const typename M::State> states, std::span<const Observation> obs, const M& model) {
  if (states.size() != obs.size() + 1) throw ContractViolation("trajectory_score: length mismatch");
  double acc = 0.0;
  for (std::size_t t = 1; t < states.size(); ++t) {
    const double step = log_joint_step(model, static_cast<int>(t), states[t - 1], states[t], obs[t - 1]);
    acc = t == 1 ? step : step + acc;
  }
  return acc;
}

inline constexpr double kBruteForceLimit = 1e6;

/// Exhaustive search over every index tuple. Tuples are visited with the time-1 index
/// varying fastest and the first strict maximum wins, which matches the tie rule of
/// forward_step + backtrack (lowest final index, then lowest predecessor at each step).
template <StateSpaceModel M>
Trajectory<typename M::State> brute_force_map(const ParticleHistory<typename M::State>& hist,
                                              std::span<const Observation> obs, const M& model) {
  using State = typename M::State;
  const std::size_t T = hist.horizon();
  const std::size_t n = hist.num_particles();
  if (T == 0 || obs.size() < T) throw ContractViolation("brute_force_map: horizon mismatch");
  if (std::pow(static_cast<double>(n), static_cast<double>(T)) > kBruteForceLimit) {
    throw HorizonTooLarge("brute_force_map: N_s^T exceeds " + std::to_string(static_cast<long long>(kBruteForceLimit)));
  }
  std::vector<int> idx(T, 0);
  std::vector<int> best_idx;
  double best = kNegInf;
  std::vector<State> path(T + 1);
  path[0] = hist.x0;
  while (true) {
    for (std::size_t r = 0; r < T; ++r) path[r + 1] = hist.sets[r].particles[static_cast<std::size_t>(idx[r])];
    const double score = trajectory_score(std::span<const State>(path), obs.first(T), model);
    if (score > best) {
      best = score;
      best_idx = idx;
    }
    std::size_t r = 0;
    while (r < T && ++idx[r] == static_cast<int>(n)) idx[r++] = 0;
    if (r == T) break;
  }
  if (best_idx.empty()) throw DecodeFailure("no admissible path: every path score is -inf");
  Trajectory<State> traj;
  traj.indices = best_idx;
  traj.states.push_back(hist.x0);
  for (std::size_t r = 0; r < T; ++r) traj.states.push_back(hist.sets[r].particles[static_cast<std::size_t>(best_idx[r])]);
  traj.score = best;
  return traj;
}

template <class State>
struct SteinMapSeqResult {
  Trajectory<State> trajectory;
  ParticleHistory<State> history;
  DpTables tables;
};

/// Full pipeline: SVGD particles for t = 1, then for each later step the sequential SVGD
/// update immediately followed by one forward recursion step, and finally backtracking.
template <StateSpaceModel M>
SteinMapSeqResult<typename M::State> stein_map_seq(const M& model, const typename M::State& x0,
                                                   std::span<const Observation> obs, const SvgdConfig& cfg, Rng& rng) {
  using State = typename M::State;
  if (obs.empty()) throw ContractViolation("stein_map_seq: no observations");
  SteinMapSeqResult<State> out;
  out.history.x0 = x0;
  auto svgd_at = [&](std::size_t r, auto&& fn) {
    try {
      return fn();
    } catch (const NumericalError& e) {
      throw NumericalError("SVGD failed at t=" + std::to_string(r + 1) + ": " + e.what(), e.index());
    }
  };
  out.history.sets.push_back(svgd_at(0, [&] { return initial_particle_update(obs[0], x0, model, cfg, rng); }));
  out.tables.scores.push_back(init_scores(out.history.sets[0], x0, obs[0], model));
  out.tables.backpointers.emplace_back(out.history.sets[0].size(), 0);
  for (std::size_t r = 1; r < obs.size(); ++r) {
    out.history.sets.push_back(
        svgd_at(r, [&] { return sequential_particle_update(out.history.sets[r - 1], obs[r], model, cfg, rng); }));
    auto step = forward_step(std::span<const double>(out.tables.scores.back()), out.history.sets[r - 1],
                             out.history.sets[r], obs[r], model);
    for (int i : step.dead_ends) out.tables.dead_ends.emplace_back(static_cast<int>(r + 1), i);
    out.tables.scores.push_back(std::move(step.scores));
    out.tables.backpointers.push_back(std::move(step.backpointers));
  }
  out.trajectory = backtrack(out.tables, out.history);
  return out;
}

struct ElboEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo estimate of the small-variance ELBO of a candidate path s: every state is
/// replaced by N(s_t, eps I) and each step term E E[log p(z_t, x_t | x_{t-1})] is averaged
/// over n_quad joint draws. The Gaussian entropy constant is left out. When
/// x0_prior_var > 0 the term E[log N(x0; s_0, x0_prior_var I)] is included as well.
template <StateSpaceModel M>
ElboEstimate elbo_epsilon_score(std::span<const typename M::State> s, std::span<const Observation> obs, const M& model,
                                double eps, int n_quad, Rng& rng, double x0_prior_var = 0.0) {
  using State = typename M::State;
  if (!(eps > 0.0)) throw ContractViolation("elbo_epsilon_score: eps must be positive");
  if (n_quad < 2) throw ContractViolation("elbo_epsilon_score: n_quad must be >= 2");
  if (s.size() != obs.size() + 1) throw ContractViolation("elbo_epsilon_score: length mismatch");
  const double sd = std::sqrt(eps);
  auto perturb = [&](const State& c) {
    State x = c;
    for (Eigen::Index k = 0; k < x.size(); ++k) x[k] += sd * standard_normal(rng);
    return x;
  };
  ElboEstimate out;
  double var_sum = 0.0;
  auto accumulate = [&](auto&& sample) {
    double mean = 0.0;
    double m2 = 0.0;
    for (int q = 0; q < n_quad; ++q) {
      const double v = sample();
      if (v == kNegInf) return false;
      const double d = v - mean;
      mean += d / (q + 1);
      m2 += d * (v - mean);
    }
    out.value += mean;
    var_sum += m2 / (n_quad - 1) / n_quad;
    return true;
  };
  if (x0_prior_var > 0.0) {
    const bool ok = accumulate([&] {
      const State x0 = perturb(s[0]);
      double acc = 0.0;
      for (Eigen::Index k = 0; k < x0.size(); ++k) acc += -0.5 * (std::log(kTwoPi * x0_prior_var) + (x0[k] - s[0][k]) * (x0[k] - s[0][k]) / x0_prior_var);
      return acc;
    });
    if (!ok) return {kNegInf, 0.0};
  }
  for (std::size_t t = 1; t < s.size(); ++t) {
    const bool ok = accumulate([&] {
      const State xp = perturb(s[t - 1]);
      const State x = perturb(s[t]);
      return log_joint_step(model, static_cast<int>(t), xp, x, obs[t - 1]);
    });
    if (!ok) return {kNegInf, 0.0};
  }
  out.std_error = std::sqrt(var_sum);
  return out;
}

}  // namespace steinmap
