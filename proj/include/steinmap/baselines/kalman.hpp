#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/LU>

#include "steinmap/errors.hpp"
#include "steinmap/model.hpp"
#include "steinmap/types.hpp"

namespace steinmap {

template <class State>
struct GaussianBelief {
  State mean;
  Eigen::MatrixXd cov;
};

namespace detail {

inline void symmetrize(Eigen::MatrixXd& p) { p = 0.5 * (p + p.transpose()).eval(); }

template <class State>
Eigen::VectorXd to_dynamic(const State& x) {
  return Eigen::VectorXd(x);
}

template <class State>
State from_dynamic(const Eigen::VectorXd& v) {
  State x = v;
  return x;
}

/// Rows of z that take part in the update.
inline std::vector<Eigen::Index> valid_rows(const Observation& z) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z.is_valid(i)) rows.push_back(i);
  }
  return rows;
}

inline bool is_angular(std::span<const int> angular, Eigen::Index i) {
  for (int k : angular) {
    if (k == i) return true;
  }
  return false;
}

/// Solves with S, regularizing by 1e-9 I when S is not positive definite.
inline Eigen::MatrixXd gain(const Eigen::MatrixXd& pht, Eigen::MatrixXd s, Diagnostics* diag, int t) {
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success || !s.allFinite()) {
    note(diag, "innovation covariance singular at t=" + std::to_string(t) + ", regularized");
    s += 1e-9 * Eigen::MatrixXd::Identity(s.rows(), s.cols());
    llt.compute(s);
  }
  return llt.solve(pht.transpose()).transpose();
}

/// Iterated (Gauss-Newton) measurement update around the predicted mean; one iteration is
/// the ordinary EKF update. `lin_point`, when given, replaces the first linearization point.
template <DifferentiableModel M>
GaussianBelief<typename M::State> measurement_update(const M& model, const GaussianBelief<typename M::State>& pred,
                                                     const Observation& z, int n_iter, Diagnostics* diag, int t,
                                                     const typename M::State* lin_point = nullptr) {
  using State = typename M::State;
  const auto rows = valid_rows(z);
  if (rows.empty()) return pred;
  const auto ang_x = model.angular_components();
  const auto ang_z = model.angular_obs_components();
  const Eigen::VectorXd r_full = model.obs_var();
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index n = pred.mean.size();

  State x_lin = lin_point != nullptr ? *lin_point : pred.mean;
  State x_new = pred.mean;
  Eigen::MatrixXd K;
  Eigen::MatrixXd H(m, n);
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(m, m);
  for (int it = 0; it < n_iter; ++it) {
    const Eigen::VectorXd h_full = model.observation_mean(x_lin, z);
    const Eigen::MatrixXd H_full = model.observation_jacobian(x_lin, z);
    Eigen::VectorXd y(m);
    const Eigen::VectorXd offset = H_full * to_dynamic(angular_difference(pred.mean, x_lin, ang_x));
    for (Eigen::Index r = 0; r < m; ++r) {
      const Eigen::Index row = rows[static_cast<std::size_t>(r)];
      H.row(r) = H_full.row(row);
      R(r, r) = r_full[row];
      double innov = z.values[row] - h_full[row];
      if (is_angular(ang_z, row)) innov = wrap_angle(innov);
      y[r] = innov - offset[row];
    }
    const Eigen::MatrixXd pht = pred.cov * H.transpose();
    K = gain(pht, H * pht + R, diag, t);
    x_new = pred.mean + from_dynamic<State>(K * y);
    wrap_components(x_new, ang_x);
    x_lin = x_new;
  }
  GaussianBelief<State> post;
  post.mean = x_new;
  const Eigen::MatrixXd ikh = Eigen::MatrixXd::Identity(n, n) - K * H;
  post.cov = ikh * pred.cov * ikh.transpose() + K * R * K.transpose();
  symmetrize(post.cov);
  return post;
}

template <DifferentiableModel M>
GaussianBelief<typename M::State> predict(const M& model, const GaussianBelief<typename M::State>& b, int t,
                                          Eigen::MatrixXd* jac_out = nullptr) {
  GaussianBelief<typename M::State> out;
  out.mean = model.transition_mean(t, b.mean);
  const Eigen::MatrixXd F = model.transition_jacobian(t, b.mean);
  out.cov = F * b.cov * F.transpose();
  out.cov.diagonal() += to_dynamic(model.process_var());
  symmetrize(out.cov);
  if (jac_out != nullptr) *jac_out = F;
  return out;
}

template <class State>
struct FilterPass {
  std::vector<GaussianBelief<State>> filtered;   // t = 0..T
  std::vector<GaussianBelief<State>> predicted;  // t = 1..T at index t
  std::vector<Eigen::MatrixXd> jacobians;        // F_t at index t
};

template <class State>
std::vector<GaussianBelief<State>> rts_smooth(const FilterPass<State>& pass, std::span<const int> angular) {
  const std::size_t T = pass.filtered.size() - 1;
  std::vector<GaussianBelief<State>> smoothed(pass.filtered);
  for (std::size_t t = T; t-- > 0;) {
    const auto& f = pass.filtered[t];
    const auto& p = pass.predicted[t + 1];
    const Eigen::MatrixXd G = p.cov.transpose().ldlt().solve(pass.jacobians[t + 1] * f.cov.transpose()).transpose();
    State dm = from_dynamic<State>(G * to_dynamic(angular_difference(smoothed[t + 1].mean, p.mean, angular)));
    smoothed[t].mean = f.mean + dm;
    wrap_components(smoothed[t].mean, angular);
    smoothed[t].cov = f.cov + G * (smoothed[t + 1].cov - p.cov) * G.transpose();
    symmetrize(smoothed[t].cov);
  }
  return smoothed;
}

template <DifferentiableModel M>
FilterPass<typename M::State> filter_pass(const M& model, const GaussianBelief<typename M::State>& belief0,
                                          std::span<const Observation> obs, int n_iter, Diagnostics* diag) {
  FilterPass<typename M::State> pass;
  pass.filtered.push_back(belief0);
  pass.predicted.push_back(belief0);
  pass.jacobians.emplace_back();
  for (std::size_t r = 0; r < obs.size(); ++r) {
    const int t = static_cast<int>(r + 1);
    Eigen::MatrixXd F;
    auto pred = predict(model, pass.filtered.back(), t, &F);
    pass.filtered.push_back(measurement_update(model, pred, obs[r], n_iter, diag, t));
    pass.predicted.push_back(std::move(pred));
    pass.jacobians.push_back(std::move(F));
  }
  return pass;
}

}  // namespace detail

/// Iterated EKF: the measurement update relinearizes n_iter times at the running
/// posterior mean. Returns beliefs for t = 1..T.
template <DifferentiableModel M>
std::vector<GaussianBelief<typename M::State>> iekf(const M& model, const GaussianBelief<typename M::State>& belief0,
                                                    std::span<const Observation> obs, int n_iter,
                                                    Diagnostics* diag = nullptr) {
  if (n_iter < 1) throw ContractViolation("iekf: n_iter must be >= 1");
  auto pass = detail::filter_pass(model, belief0, obs, n_iter, diag);
  pass.filtered.erase(pass.filtered.begin());
  return pass.filtered;
}

template <DifferentiableModel M>
std::vector<GaussianBelief<typename M::State>> ekf(const M& model, const GaussianBelief<typename M::State>& belief0,
                                                   std::span<const Observation> obs, Diagnostics* diag = nullptr) {
  return iekf(model, belief0, obs, 1, diag);
}

/// RTS smoother over the EKF pass. Returns beliefs for t = 1..T.
template <DifferentiableModel M>
std::vector<GaussianBelief<typename M::State>> eks(const M& model, const GaussianBelief<typename M::State>& belief0,
                                                   std::span<const Observation> obs, Diagnostics* diag = nullptr) {
  auto pass = detail::filter_pass(model, belief0, obs, 1, diag);
  auto smoothed = detail::rts_smooth(pass, model.angular_components());
  smoothed.erase(smoothed.begin());
  return smoothed;
}

inline constexpr double kDivergenceNorm = 1e6;

/// Iterated EKS (Gauss-Newton smoother): every pass linearizes the dynamics and the
/// observations around the current trajectory, runs a Kalman filter and an RTS pass, and
/// takes the smoothed means as the next trajectory. Divergence is flagged on the result.
template <DifferentiableModel M>
Trajectory<typename M::State> ieks(const M& model, const GaussianBelief<typename M::State>& belief0,
                                   const Trajectory<typename M::State>& init_traj, std::span<const Observation> obs,
                                   int n_iter, Diagnostics* diag = nullptr) {
  using State = typename M::State;
  if (init_traj.states.size() != obs.size() + 1) throw ContractViolation("ieks: init_traj must have length T+1");
  if (n_iter < 0) throw ContractViolation("ieks: n_iter must be >= 0");
  const auto ang = model.angular_components();
  Trajectory<State> traj = init_traj;
  for (int it = 0; it < n_iter; ++it) {
    detail::FilterPass<State> pass;
    pass.filtered.push_back(belief0);
    pass.predicted.push_back(belief0);
    pass.jacobians.emplace_back();
    for (std::size_t r = 0; r < obs.size(); ++r) {
      const int t = static_cast<int>(r + 1);
      const State& lin_prev = traj.states[r];
      const auto& f = pass.filtered.back();
      const Eigen::MatrixXd F = model.transition_jacobian(t, lin_prev);
      GaussianBelief<State> pred;
      pred.mean = model.transition_mean(t, lin_prev) +
                  detail::from_dynamic<State>(F * detail::to_dynamic(angular_difference(f.mean, lin_prev, ang)));
      wrap_components(pred.mean, ang);
      pred.cov = F * f.cov * F.transpose();
      pred.cov.diagonal() += detail::to_dynamic(model.process_var());
      detail::symmetrize(pred.cov);
      pass.filtered.push_back(detail::measurement_update(model, pred, obs[r], 1, diag, t, &traj.states[r + 1]));
      pass.predicted.push_back(std::move(pred));
      pass.jacobians.push_back(F);
    }
    const auto smoothed = detail::rts_smooth(pass, ang);
    bool diverged = false;
    for (std::size_t t = 1; t < smoothed.size(); ++t) {
      const auto& m = smoothed[t].mean;
      if (!m.allFinite() || m.norm() > kDivergenceNorm) diverged = true;
    }
    if (diverged) {
      note(diag, "ieks diverged at iteration " + std::to_string(it + 1));
      traj.diverged = true;
      break;
    }
    for (std::size_t t = 1; t < smoothed.size(); ++t) traj.states[t] = smoothed[t].mean;
  }
  return traj;
}

template <class State>
Trajectory<State> belief_means(const State& x0, std::span<const GaussianBelief<State>> beliefs) {
  Trajectory<State> traj;
  traj.states.reserve(beliefs.size() + 1);
  traj.states.push_back(x0);
  for (const auto& b : beliefs) {
    traj.states.push_back(b.mean);
    if (!b.mean.allFinite() || b.mean.norm() > kDivergenceNorm) traj.diverged = true;
  }
  return traj;
}

}  // namespace steinmap
