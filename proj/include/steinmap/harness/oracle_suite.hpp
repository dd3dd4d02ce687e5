#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "steinmap/gaussian.hpp"
#include "steinmap/mapseq_dp.hpp"
#include "steinmap/model.hpp"
#include "steinmap/random.hpp"
#include "steinmap/scenarios/linear_gaussian.hpp"
#include "steinmap/scenarios/scenario_a.hpp"
#include "steinmap/scenarios/scenario_b.hpp"
#include "steinmap/scenarios/scenario_c.hpp"

namespace steinmap {

using ScalarModel = FunctionalModel<Eigen::VectorXd>;

struct DpInstance {
  ScalarModel model;
  ParticleHistory<Eigen::VectorXd> history;
  std::vector<Observation> observations;
};

/// Random 1-D Gaussian model x_t ~ N(a x_{t-1}, q), z_t ~ N(c x_t, r). When `truncate` is
/// set the transition density is -inf beyond |x - a x_prev| > cutoff, which leaves some
/// (and occasionally all) paths inadmissible. A particle is duplicated now and then so
/// exact score ties occur.
inline DpInstance random_dp_instance(Rng& rng, int T, int n, bool truncate) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double a = -1.5 + 3.0 * u(rng);
  const double q = 0.2 + 1.8 * u(rng);
  const double c = -1.0 + 2.0 * u(rng);
  const double r = 0.2 + 1.8 * u(rng);
  const double cutoff = truncate ? 0.3 + 1.5 * u(rng) : kNegInf;

  DpInstance inst;
  auto& m = inst.model;
  m.n_x = 1;
  m.n_z = 1;
  m.transition_logpdf_fn = [=](int, const Eigen::VectorXd& xp, const Eigen::VectorXd& x) {
    const double d = x[0] - a * xp[0];
    if (truncate && std::abs(d) > cutoff) return kNegInf;
    return gaussian_logpdf_1d(x[0], a * xp[0], q);
  };
  m.transition_grad_fn = [=](int, const Eigen::VectorXd& xp, const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(1, -(x[0] - a * xp[0]) / q);
  };
  m.transition_sample_fn = [=](int, const Eigen::VectorXd& xp, Rng& g) {
    return Eigen::VectorXd::Constant(1, a * xp[0] + std::sqrt(q) * standard_normal(g));
  };
  m.likelihood_logpdf_fn = [=](const Eigen::VectorXd& x, const Observation& z) {
    return gaussian_logpdf_1d(z.values[0], c * x[0], r);
  };
  m.likelihood_grad_fn = [=](const Eigen::VectorXd& x, const Observation& z) {
    return Eigen::VectorXd::Constant(1, c * (z.values[0] - c * x[0]) / r);
  };

  inst.history.x0 = Eigen::VectorXd::Constant(1, standard_normal(rng));
  for (int t = 1; t <= T; ++t) {
    ParticleSet<Eigen::VectorXd> ps;
    ps.time_index = t;
    for (int i = 0; i < n; ++i) ps.particles.push_back(Eigen::VectorXd::Constant(1, 1.5 * standard_normal(rng)));
    if (n > 1 && u(rng) < 0.2) ps.particles[static_cast<std::size_t>(n - 1)] = ps.particles[0];
    inst.history.sets.push_back(std::move(ps));
    Observation z;
    z.time_index = t;
    z.values = Eigen::VectorXd::Constant(1, 2.0 * standard_normal(rng));
    inst.observations.push_back(std::move(z));
  }
  return inst;
}

struct DpOracleReport {
  int instances = 0;
  int agreed = 0;
  int both_inadmissible = 0;
  int with_neg_inf = 0;
  std::vector<std::string> failures;

  bool passed() const { return agreed == instances; }
};

/// forward recursion + backtracking against exhaustive enumeration: same indices and the
/// same score bit for bit, or both reporting that no admissible path exists.
inline DpOracleReport dp_oracle_suite(int instances, std::uint64_t seed, int max_T = 5, int max_n = 4) {
  DpOracleReport rep;
  Rng rng(seed);
  std::uniform_int_distribution<int> pick_T(1, max_T);
  std::uniform_int_distribution<int> pick_n(1, max_n);
  for (int k = 0; k < instances; ++k) {
    const bool truncate = k % 3 == 0;
    const auto inst = random_dp_instance(rng, pick_T(rng), pick_n(rng), truncate);
    const std::span<const Observation> obs(inst.observations);
    ++rep.instances;
    bool dp_failed = false;
    bool bf_failed = false;
    Trajectory<Eigen::VectorXd> dp;
    Trajectory<Eigen::VectorXd> bf;
    DpTables tables;
    try {
      std::tie(dp, tables) = viterbi_decode(inst.history, obs, inst.model);
    } catch (const DecodeFailure&) {
      dp_failed = true;
    }
    try {
      bf = brute_force_map(inst.history, obs, inst.model);
    } catch (const DecodeFailure&) {
      bf_failed = true;
    }
    bool any_inf = dp_failed || !tables.dead_ends.empty();
    for (const auto& row : tables.scores) {
      for (double v : row) any_inf = any_inf || std::isinf(v);
    }
    if (any_inf) ++rep.with_neg_inf;
    if (dp_failed || bf_failed) {
      if (dp_failed && bf_failed) {
        ++rep.agreed;
        ++rep.both_inadmissible;
      } else {
        rep.failures.push_back("instance " + std::to_string(k) + ": only one side found no admissible path");
      }
      continue;
    }
    if (dp.indices == bf.indices && dp.score == bf.score) {
      ++rep.agreed;
    } else {
      rep.failures.push_back("instance " + std::to_string(k) + ": dp score " + std::to_string(dp.score) +
                             " vs brute force " + std::to_string(bf.score));
    }
  }
  return rep;
}

struct GradientReport {
  std::string model;
  int points = 0;
  int passed_points = 0;
  double worst_rel_error = 0.0;

  bool passed() const { return passed_points == points; }
};

namespace detail {

/// Checks both the transition and the likelihood gradient of `model` at points produced
/// by `draw(rng) -> (t, x_prev, x, z)`.
template <StateSpaceModel M, class Draw>
GradientReport gradient_suite_for(const std::string& name, const M& model, int points, Rng& rng, Draw&& draw) {
  using State = typename M::State;
  GradientReport rep;
  rep.model = name;
  for (int k = 0; k < points; ++k) {
    const auto [t, xp, x, z] = draw(rng);
    const auto trans = check_gradient<State>([&](const State& y) { return model.transition_logpdf(t, xp, y); },
                                             model.transition_grad(t, xp, x), x);
    const auto lik = check_gradient<State>([&](const State& y) { return model.likelihood_logpdf(y, z); },
                                           model.likelihood_grad(x, z), x);
    ++rep.points;
    if (trans.passed && lik.passed) ++rep.passed_points;
    rep.worst_rel_error = std::max({rep.worst_rel_error, trans.max_rel_error, lik.max_rel_error});
  }
  return rep;
}

}  // namespace detail

/// Analytic-versus-central-difference checks for every shipped model.
inline std::vector<GradientReport> gradient_suite(int points, std::uint64_t seed) {
  std::vector<GradientReport> out;
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  const UngmModel a;
  out.push_back(detail::gradient_suite_for("scenario A", a, points, rng, [&](Rng& g) {
    using S = UngmModel::State;
    const int t = 1 + static_cast<int>(u(g) * 100);
    const S xp = S::Constant(10.0 * standard_normal(g));
    const S x = S::Constant(10.0 * standard_normal(g));
    Observation z;
    z.time_index = t;
    z.values = Eigen::VectorXd::Constant(1, 0.05 * x[0] * x[0] + 3.0 * standard_normal(g));
    return std::tuple{t, xp, x, z};
  }));

  UnicycleLandmarkModel b;
  b.controls = figure_eight_controls(630);
  b.landmarks = square_landmarks();
  out.push_back(detail::gradient_suite_for("scenario B mixture", b, points, rng, [&](Rng& g) {
    using S = UnicycleLandmarkModel::State;
    const int t = 1 + static_cast<int>(u(g) * 629);
    const S xp(-3.0 + 6.0 * u(g), -3.0 + 6.0 * u(g), -kPi + kTwoPi * u(g));
    S x = b.transition_mean(t, xp);
    for (int c = 0; c < 3; ++c) x[c] += 0.01 * standard_normal(g);
    x[2] = wrap_angle(x[2]);
    Observation z;
    z.time_index = t;
    z.values = b.measure(x, static_cast<std::size_t>(u(g) * 4.0));
    z.values[0] += standard_normal(g);
    z.values[1] = wrap_angle(z.values[1] + 0.17 * standard_normal(g));
    return std::tuple{t, xp, x, z};
  }));

  RangeOnlyModel c;
  c.anchors = default_anchor_map().anchors;
  out.push_back(detail::gradient_suite_for("scenario C masked ranges", c, points, rng, [&](Rng& g) {
    using S = RangeOnlyModel::State;
    const S xp(1.0 + 6.0 * u(g), 1.0 + 6.0 * u(g));
    const S x = xp + 0.3 * S(standard_normal(g), standard_normal(g));
    Observation z;
    z.time_index = 1;
    z.values.resize(3);
    z.valid.assign(3, 1);
    for (int l = 0; l < 3; ++l) z.values[l] = (x - c.anchors[static_cast<std::size_t>(l)]).norm() + 0.5 * standard_normal(g);
    if (u(g) < 0.5) z.valid[0] = 0;
    return std::tuple{1, xp, x, z};
  }));

  LinearGaussianModel<2> lin;
  lin.A << 1.0, 0.1, -0.2, 0.9;
  lin.q << 0.5, 0.3;
  lin.C = Eigen::MatrixXd(1, 2);
  lin.C << 1.0, -0.5;
  lin.r = Eigen::VectorXd::Constant(1, 0.7);
  out.push_back(detail::gradient_suite_for("linear Gaussian", lin, points, rng, [&](Rng& g) {
    using S = LinearGaussianModel<2>::State;
    const S xp(3.0 * standard_normal(g), 3.0 * standard_normal(g));
    const S x(3.0 * standard_normal(g), 3.0 * standard_normal(g));
    Observation z;
    z.time_index = 1;
    z.values = Eigen::VectorXd::Constant(1, 3.0 * standard_normal(g));
    return std::tuple{1, xp, x, z};
  }));
  return out;
}

}  // namespace steinmap
