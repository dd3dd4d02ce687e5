#pragma once

#include <algorithm>
#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "steinmap/baselines/kalman.hpp"
#include "steinmap/baselines/particle_filter.hpp"
#include "steinmap/baselines/stein_filter.hpp"
#include "steinmap/errors.hpp"
#include "steinmap/mapseq_dp.hpp"
#include "steinmap/scenarios/dataset.hpp"
#include "steinmap/svgd.hpp"

namespace steinmap {

/// Registry entry: a name plus its size parameter, particles for sampling methods and
/// iterations for the iterated Gaussian ones. Written "name" or "name:param".
struct EstimatorSpec {
  std::string name;
  int param = 0;

  std::string label() const { return has_param() ? name + ":" + std::to_string(param) : name; }
  bool has_param() const { return name != "ekf" && name != "eks" && name != "eks-gt"; }
  bool is_sampling() const;
};

inline const std::vector<std::string>& registry_names() {
  static const std::vector<std::string> names{"ekf", "eks", "eks-gt", "iekf", "ieks", "ieks-gt",
                                              "pf",  "pf-map", "pf-map-seq", "spf", "spf-map", "stein-map-seq"};
  return names;
}

inline bool EstimatorSpec::is_sampling() const {
  return name == "pf" || name == "pf-map" || name == "pf-map-seq" || name == "spf" || name == "spf-map" ||
         name == "stein-map-seq";
}

/// Default particle / iteration counts per estimator.
inline int default_param(std::string_view name) {
  if (name == "pf") return 1000;
  if (name == "pf-map" || name == "pf-map-seq") return 100;
  if (name == "spf" || name == "spf-map" || name == "stein-map-seq") return 10;
  if (name == "iekf" || name == "ieks" || name == "ieks-gt") return 3;
  return 0;
}

/// `particles`, when set, replaces the default particle count of sampling estimators
/// written without an explicit parameter.
inline EstimatorSpec parse_estimator(std::string_view text, std::optional<int> particles = std::nullopt) {
  const auto colon = text.find(':');
  EstimatorSpec spec;
  spec.name = std::string(text.substr(0, colon));
  const auto& names = registry_names();
  if (std::find(names.begin(), names.end(), spec.name) == names.end()) {
    throw ConfigError("unknown estimator '" + spec.name + "'");
  }
  spec.param = default_param(spec.name);
  if (particles && spec.is_sampling()) {
    if (*particles < 1) throw ConfigError("particle count must be >= 1");
    spec.param = *particles;
  }
  if (colon != std::string_view::npos) {
    if (!spec.has_param()) throw ConfigError("estimator '" + spec.name + "' takes no parameter");
    const auto digits = text.substr(colon + 1);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || value < 1) {
      throw ConfigError("bad parameter in estimator '" + std::string(text) + "'");
    }
    spec.param = value;
  }
  return spec;
}

/// Comma separated list, e.g. "ekf,pf:1000,stein-map-seq:10".
inline std::vector<EstimatorSpec> parse_estimator_list(std::string_view text,
                                                       std::optional<int> particles = std::nullopt) {
  std::vector<EstimatorSpec> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = text.substr(0, comma);
    if (!item.empty()) out.push_back(parse_estimator(item, particles));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

template <class State>
struct EstimateOutput {
  Trajectory<State> trajectory;
  /// Particle clouds for t = 1..T when the estimator is particle based and clouds were requested.
  std::vector<std::vector<State>> clouds;
};

namespace detail {

template <class State>
GaussianBelief<State> initial_belief(const State& x0, const State& var) {
  return {x0, Eigen::MatrixXd(var.asDiagonal())};
}

template <class State>
std::vector<std::vector<State>> clouds_of(const std::vector<ParticleSet<State>>& sets) {
  std::vector<std::vector<State>> out;
  out.reserve(sets.size());
  for (const auto& s : sets) out.push_back(s.particles);
  return out;
}

}  // namespace detail

/// Runs one registry estimator on a generated dataset. Every estimator draws from its own
/// `rng`, so adding or removing estimators never shifts another one's randomness.
template <DifferentiableModel M>
EstimateOutput<typename M::State> run_estimator(const EstimatorSpec& spec, const ScenarioDataset<M>& ds,
                                                const SvgdConfig& svgd, Rng& rng, bool keep_clouds = false,
                                                Diagnostics* diag = nullptr) {
  using State = typename M::State;
  const auto& model = ds.model;
  const std::span<const Observation> obs(ds.observations);
  const auto b0 = detail::initial_belief<State>(ds.x0, ds.initial_var);
  const auto n = spec.param;
  EstimateOutput<State> out;
  auto means = [&](const std::vector<GaussianBelief<State>>& beliefs) {
    return belief_means<State>(ds.x0, beliefs);
  };

  if (spec.name == "ekf") {
    out.trajectory = means(ekf(model, b0, obs, diag));
  } else if (spec.name == "eks") {
    out.trajectory = means(eks(model, b0, obs, diag));
  } else if (spec.name == "iekf") {
    out.trajectory = means(iekf(model, b0, obs, n, diag));
  } else if (spec.name == "ieks") {
    const auto init = means(iekf(model, b0, obs, 3, diag));
    out.trajectory = ieks(model, b0, init, obs, n, diag);
  } else if (spec.name == "eks-gt") {
    out.trajectory = ieks(model, b0, ds.truth, obs, 1, diag);
  } else if (spec.name == "ieks-gt") {
    out.trajectory = ieks(model, b0, ds.truth, obs, n, diag);
  } else if (spec.name == "pf" || spec.name == "pf-map" || spec.name == "pf-map-seq") {
    auto pf = particle_filter(model, ds.x0, obs, n, rng, diag);
    if (spec.name == "pf") {
      out.trajectory = pf.mmse;
    } else if (spec.name == "pf-map") {
      out.trajectory = pf_map(pf, obs, model);
    } else {
      out.trajectory = pf_map_seq(pf, obs, model);
    }
    if (keep_clouds) {
      for (auto& c : pf.clouds) out.clouds.push_back(std::move(c.particles));
    }
  } else if (spec.name == "spf" || spec.name == "spf-map") {
    SvgdConfig cfg = svgd;
    cfg.num_particles = n;
    auto spf = stein_particle_filter(model, ds.x0, obs, cfg, rng);
    out.trajectory = spec.name == "spf" ? spf.mmse : spf_map(spf, obs, model);
    if (keep_clouds) out.clouds = detail::clouds_of(spf.history.sets);
  } else if (spec.name == "stein-map-seq") {
    SvgdConfig cfg = svgd;
    cfg.num_particles = n;
    auto res = stein_map_seq(model, ds.x0, obs, cfg, rng);
    out.trajectory = std::move(res.trajectory);
    if (keep_clouds) out.clouds = detail::clouds_of(res.history.sets);
  } else {
    throw ConfigError("unknown estimator '" + spec.name + "'");
  }
  return out;
}

}  // namespace steinmap
