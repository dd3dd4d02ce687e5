#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "steinmap/baselines/particle_filter.hpp"
#include "steinmap/mapseq_dp.hpp"
#include "steinmap/model.hpp"
#include "steinmap/svgd.hpp"

namespace steinmap {

/// Score of p(z_t | x) (1/N) sum_j p(x | x_{t-1}^j): the prior part is the responsibility-
/// weighted average of the component transition scores.
template <StateSpaceModel M>
typename M::State mixture_prior_score(const M& model, int t, std::span<const typename M::State> ancestors,
                                      const Observation& z, const typename M::State& x, std::vector<double>& scratch) {
  using State = typename M::State;
  scratch.resize(ancestors.size());
  double top = kNegInf;
  for (std::size_t j = 0; j < ancestors.size(); ++j) {
    scratch[j] = model.transition_logpdf(t, ancestors[j], x);
    top = std::max(top, scratch[j]);
  }
  double total = 0.0;
  for (double& w : scratch) {
    w = top == kNegInf ? 1.0 : std::exp(w - top);
    total += w;
  }
  State prior = State::Zero(x.size());
  for (std::size_t j = 0; j < ancestors.size(); ++j) {
    if (scratch[j] == 0.0) continue;
    prior += (scratch[j] / total) * model.transition_grad(t, ancestors[j], x);
  }
  return State(model.likelihood_grad(x, z) + prior);
}

template <class State>
struct SteinFilterResult {
  ParticleHistory<State> history;
  Trajectory<State> mmse;
};

/// Stein particle filter: per step, particles start from the previous set (init policy),
/// SVGD runs on the filtering target with a mixture prior over the previous particles, and
/// the estimate is the particle mean.
template <StateSpaceModel M>
SteinFilterResult<typename M::State> stein_particle_filter(const M& model, const typename M::State& x0,
                                                           std::span<const Observation> obs, const SvgdConfig& cfg,
                                                           Rng& rng) {
  using State = typename M::State;
  if (cfg.num_particles < 1) throw ContractViolation("stein_particle_filter: num_particles must be >= 1");
  const auto ang = model.angular_components();
  SteinFilterResult<State> out;
  out.history.x0 = x0;
  out.mmse.states.push_back(x0);
  std::vector<double> scratch;
  for (std::size_t r = 0; r < obs.size(); ++r) {
    const int t = static_cast<int>(r + 1);
    ParticleSet<State> ps;
    ps.time_index = t;
    std::vector<State> ancestors;
    if (r == 0) {
      const double sd = std::sqrt(cfg.initial_spread);
      for (int i = 0; i < cfg.num_particles; ++i) {
        State draw = x0;
        for (Eigen::Index c = 0; c < draw.size(); ++c) draw[c] += sd * standard_normal(rng);
        wrap_components(draw, ang);
        ps.particles.push_back(detail::initialize_from(model, t, draw, cfg.init_policy, rng));
      }
      ancestors.push_back(x0);
    } else {
      const auto& prev = out.history.sets.back().particles;
      for (const State& xp : prev) ps.particles.push_back(detail::initialize_from(model, t, xp, cfg.init_policy, rng));
      ancestors = detail::canonical_copy(std::span<const State>(prev));
    }
    auto score = [&](const State& x) {
      return mixture_prior_score(model, t, std::span<const State>(ancestors), obs[r], x, scratch);
    };
    ps = svgd_run(std::move(ps), score, cfg, ang);
    out.mmse.states.push_back(uniform_mean(std::span<const State>(ps.particles), ang));
    out.history.sets.push_back(std::move(ps));
  }
  return out;
}

/// PF-MAP point selection applied to SVGD particles with uniform previous-step weights.
template <StateSpaceModel M>
Trajectory<typename M::State> spf_map(const SteinFilterResult<typename M::State>& spf, std::span<const Observation> obs,
                                      const M& model) {
  using State = typename M::State;
  Trajectory<State> traj;
  const auto& hist = spf.history;
  traj.states.push_back(hist.x0);
  const std::vector<State> origin{hist.x0};
  for (std::size_t r = 0; r < hist.sets.size(); ++r) {
    const auto& cur = hist.sets[r];
    const auto& prev = r == 0 ? origin : hist.sets[r - 1].particles;
    const std::vector<double> lw(prev.size(), -std::log(static_cast<double>(prev.size())));
    const int idx = detail::point_map_index(model, cur.time_index, std::span<const State>(cur.particles),
                                            std::span<const State>(prev), std::span<const double>(lw), obs[r]);
    traj.indices.push_back(idx);
    traj.states.push_back(cur.particles[static_cast<std::size_t>(idx)]);
  }
  return traj;
}

}  // namespace steinmap
