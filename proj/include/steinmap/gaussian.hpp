#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include <Eigen/Core>

#include "steinmap/errors.hpp"
#include "steinmap/types.hpp"

namespace steinmap {

inline double gaussian_logpdf_1d(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (std::log(kTwoPi * var) + d * d / var);
}

/// Log density of N(mean, diag(cov_diag)) at x.
template <class A, class B, class C>
double gaussian_logpdf(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& mean,
                       const Eigen::MatrixBase<C>& cov_diag) {
  if (x.size() != mean.size() || x.size() != cov_diag.size()) {
    throw ContractViolation("gaussian_logpdf: dimension mismatch");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(cov_diag[i] > 0.0)) throw ContractViolation("gaussian_logpdf: variance must be positive");
    acc += gaussian_logpdf_1d(x[i], mean[i], cov_diag[i]);
  }
  return acc;
}

/// log(sum(exp(v))); -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace steinmap
