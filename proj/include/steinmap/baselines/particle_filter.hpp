#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "steinmap/errors.hpp"
#include "steinmap/gaussian.hpp"
#include "steinmap/mapseq_dp.hpp"
#include "steinmap/model.hpp"
#include "steinmap/random.hpp"
#include "steinmap/types.hpp"

namespace steinmap {

template <class State>
struct WeightedParticleSet {
  std::vector<State> particles;
  std::vector<double> log_weights;  // normalized: log-sum-exp == 0
  int time_index = 0;

  std::size_t size() const { return particles.size(); }
};

/// Stratified resampling: one uniform per stratum [i/N, (i+1)/N), inverted against the
/// weight CDF. Returns 0-based ancestor indices.
inline std::vector<int> stratified_resample(std::span<const double> log_weights, Rng& rng, std::size_t n_out = 0) {
  const std::size_t n = log_weights.size();
  if (n_out == 0) n_out = n;
  const double lse = log_sum_exp(log_weights);
  if (n == 0 || lse == kNegInf) throw DegenerateWeights("stratified_resample: all weights are zero");
  std::vector<double> cdf(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += std::exp(log_weights[i] - lse);
    cdf[i] = acc;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> idx(n_out);
  std::size_t j = 0;
  for (std::size_t i = 0; i < n_out; ++i) {
    const double u = (static_cast<double>(i) + unif(rng)) / static_cast<double>(n_out) * acc;
    while (j + 1 < n && cdf[j] <= u) ++j;
    idx[i] = static_cast<int>(j);
  }
  return idx;
}

/// Weighted mean; angular components use the circular mean.
template <class State>
State weighted_mean(std::span<const State> xs, std::span<const double> log_weights, std::span<const int> angular) {
  State mean = State::Zero(xs[0].size());
  std::vector<double> s(angular.size(), 0.0);
  std::vector<double> c(angular.size(), 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double w = std::exp(log_weights[i]);
    mean += w * xs[i];
    for (std::size_t a = 0; a < angular.size(); ++a) {
      s[a] += w * std::sin(xs[i][angular[a]]);
      c[a] += w * std::cos(xs[i][angular[a]]);
    }
  }
  for (std::size_t a = 0; a < angular.size(); ++a) mean[angular[a]] = std::atan2(s[a], c[a]);
  return mean;
}

template <class State>
State uniform_mean(std::span<const State> xs, std::span<const int> angular) {
  std::vector<double> lw(xs.size(), -std::log(static_cast<double>(xs.size())));
  return weighted_mean(xs, std::span<const double>(lw), angular);
}

template <class State>
struct ParticleFilterResult {
  State x0;
  std::vector<WeightedParticleSet<State>> clouds;  // pre-resampling, t = 1..T
  Trajectory<State> mmse;
};

/// Bootstrap particle filter started at the known x0, stratified resampling every step.
template <StateSpaceModel M>
ParticleFilterResult<typename M::State> particle_filter(const M& model, const typename M::State& x0,
                                                        std::span<const Observation> obs, int num_particles, Rng& rng,
                                                        Diagnostics* diag = nullptr) {
  using State = typename M::State;
  if (num_particles < 1) throw ContractViolation("particle_filter: num_particles must be >= 1");
  const auto ang = model.angular_components();
  const std::size_t n = static_cast<std::size_t>(num_particles);
  ParticleFilterResult<State> out;
  out.x0 = x0;
  out.mmse.states.push_back(x0);
  std::vector<State> ancestors(n, x0);
  for (std::size_t r = 0; r < obs.size(); ++r) {
    const int t = static_cast<int>(r + 1);
    WeightedParticleSet<State> cloud;
    cloud.time_index = t;
    cloud.particles.resize(n);
    cloud.log_weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      State x = model.transition_sample(t, ancestors[i], rng);
      wrap_components(x, ang);
      cloud.log_weights[i] = model.likelihood_logpdf(x, obs[r]);
      cloud.particles[i] = std::move(x);
    }
    const double lse = log_sum_exp(cloud.log_weights);
    if (lse == kNegInf || !std::isfinite(lse)) {
      note(diag, "particle weights underflowed at t=" + std::to_string(t) + ", reset to uniform");
      std::fill(cloud.log_weights.begin(), cloud.log_weights.end(), -std::log(static_cast<double>(n)));
    } else {
      for (double& lw : cloud.log_weights) lw -= lse;
    }
    out.mmse.states.push_back(weighted_mean(std::span<const State>(cloud.particles),
                                            std::span<const double>(cloud.log_weights), ang));
    const auto idx = stratified_resample(cloud.log_weights, rng);
    for (std::size_t i = 0; i < n; ++i) ancestors[i] = cloud.particles[static_cast<std::size_t>(idx[i])];
    out.clouds.push_back(std::move(cloud));
  }
  return out;
}

namespace detail {

/// Index maximizing p(z_t | x_t^i) sum_j w_j p(x_t^i | x_{t-1}^j), lowest index on ties.
template <StateSpaceModel M>
int point_map_index(const M& model, int t, std::span<const typename M::State> cur,
                    std::span<const typename M::State> prev, std::span<const double> prev_log_weights,
                    const Observation& z) {
  std::vector<double> terms(prev.size());
  double best = kNegInf;
  int arg = 0;
  for (std::size_t i = 0; i < cur.size(); ++i) {
    for (std::size_t j = 0; j < prev.size(); ++j) {
      terms[j] = prev_log_weights[j] + model.transition_logpdf(t, prev[j], cur[i]);
    }
    const double score = model.likelihood_logpdf(cur[i], z) + log_sum_exp(terms);
    if (score > best) {
      best = score;
      arg = static_cast<int>(i);
    }
  }
  return arg;
}

}  // namespace detail

/// Per-step MAP point estimate from the particle approximation of the filtering density.
template <StateSpaceModel M>
Trajectory<typename M::State> pf_map(const ParticleFilterResult<typename M::State>& pf, std::span<const Observation> obs,
                                     const M& model) {
  using State = typename M::State;
  Trajectory<State> traj;
  traj.states.push_back(pf.x0);
  const std::vector<State> origin{pf.x0};
  const std::vector<double> origin_w{0.0};
  for (std::size_t r = 0; r < pf.clouds.size(); ++r) {
    const auto& cur = pf.clouds[r];
    const int idx =
        r == 0 ? detail::point_map_index(model, cur.time_index, std::span<const State>(cur.particles),
                                         std::span<const State>(origin), std::span<const double>(origin_w), obs[r])
               : detail::point_map_index(model, cur.time_index, std::span<const State>(cur.particles),
                                         std::span<const State>(pf.clouds[r - 1].particles),
                                         std::span<const double>(pf.clouds[r - 1].log_weights), obs[r]);
    traj.indices.push_back(idx);
    traj.states.push_back(cur.particles[static_cast<std::size_t>(idx)]);
  }
  return traj;
}

template <class State>
ParticleHistory<State> as_history(const ParticleFilterResult<State>& pf) {
  ParticleHistory<State> hist;
  hist.x0 = pf.x0;
  for (const auto& c : pf.clouds) hist.sets.push_back(ParticleSet<State>{c.particles, c.time_index});
  return hist;
}

/// MAP sequence over the particle filter clouds, decoded with the same forward recursion
/// and backtracking as Stein-MAP-Seq.
template <StateSpaceModel M>
Trajectory<typename M::State> pf_map_seq(const ParticleFilterResult<typename M::State>& pf,
                                         std::span<const Observation> obs, const M& model) {
  return viterbi_decode(as_history(pf), obs, model).first;
}

}  // namespace steinmap
