#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "steinmap/types.hpp"

namespace steinmap {

/// RBF kernel exp(-|x - y|^2 / h).
template <class Vec>
double rbf_kernel(const Vec& x, const Vec& y, double h) {
  return std::exp(-(x - y).squaredNorm() / h);
}

/// Gradient of rbf_kernel with respect to its second argument: (2/h)(x - y) k(x, y).
template <class Vec>
Vec rbf_kernel_grad(const Vec& x, const Vec& y, double h) {
  const double k = rbf_kernel(x, y, h);
  return ((2.0 / h) * k) * (x - y);
}

/// Median heuristic h = med^2 / ln(N + 1) over pairwise distances. Falls back to 1.0 when
/// there is a single particle or every particle coincides.
template <class Vec>
double median_bandwidth(std::span<const Vec> particles, std::span<const int> angular = {}) {
  const std::size_t n = particles.size();
  if (n < 2) return 1.0;
  std::vector<double> dist;
  dist.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i + 1; k < n; ++k) {
      dist.push_back(angular_difference(particles[i], particles[k], angular).norm());
    }
  }
  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  double med = dist[mid];
  if (dist.size() % 2 == 0) {
    const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (lower + med);
  }
  if (!(med > 0.0)) return 1.0;
  return med * med / std::log(static_cast<double>(n) + 1.0);
}

}  // namespace steinmap
