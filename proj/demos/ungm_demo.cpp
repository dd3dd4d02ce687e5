// Scenario A on one seed: EKF, bootstrap PF and Stein-MAP-Seq side by side.

#include <cstdio>
#include <span>

#include "steinmap/baselines/kalman.hpp"
#include "steinmap/baselines/particle_filter.hpp"
#include "steinmap/mapseq_dp.hpp"
#include "steinmap/scenarios/metrics.hpp"
#include "steinmap/scenarios/scenario_a.hpp"

int main() {
  using namespace steinmap;
  const auto ds = gen_scenario_a(7, 100);
  const std::span<const Observation> obs(ds.observations);
  using State = UngmModel::State;

  const GaussianBelief<State> b0{ds.x0, Eigen::MatrixXd(ds.initial_var.asDiagonal())};
  const auto ekf_traj = belief_means<State>(ds.x0, ekf(ds.model, b0, obs));

  Rng pf_rng = make_rng(ds.seed, "pf");
  const auto pf = particle_filter(ds.model, ds.x0, obs, 1000, pf_rng);

  SvgdConfig cfg;
  cfg.num_particles = 10;
  Rng svgd_rng = make_rng(ds.seed, "stein-map-seq");
  const auto smap = stein_map_seq(ds.model, ds.x0, obs, cfg, svgd_rng);

  std::printf("EKF            RMSE %.3f\n", rmse(ekf_traj, ds.truth, {}));
  std::printf("PF (1000)      RMSE %.3f\n", rmse(pf.mmse, ds.truth, {}));
  std::printf("Stein-MAP-Seq  RMSE %.3f  (path score %.2f)\n", rmse(smap.trajectory, ds.truth, {}), smap.trajectory.score);
  std::printf("\n  t     truth   Stein-MAP-Seq      PF\n");
  for (std::size_t t = 1; t <= 10; ++t) {
    std::printf("%3zu %9.3f %15.3f %9.3f\n", t, ds.truth.states[t][0], smap.trajectory.states[t][0], pf.mmse.states[t][0]);
  }
}
