#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "steinmap/errors.hpp"
#include "steinmap/types.hpp"

namespace steinmap {

/// Root of the mean (over t = 1..T) squared per-step error. `components` restricts the
/// error to a subset of state entries (all when empty), `step_mask` to the steps whose
/// entry is non-zero (indexed t - 1; all when empty). Angular entries use wrapped
/// differences.
template <class State>
double rmse(const Trajectory<State>& est, const Trajectory<State>& truth, std::span<const int> angular,
            std::span<const int> components = {}, std::span<const std::uint8_t> step_mask = {}) {
  if (est.states.size() != truth.states.size()) throw ContractViolation("rmse: trajectory lengths differ");
  const std::size_t T = truth.horizon();
  if (!step_mask.empty() && step_mask.size() != T) throw ContractViolation("rmse: step mask length differs from horizon");
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 1; t <= T; ++t) {
    if (!step_mask.empty() && step_mask[t - 1] == 0) continue;
    const State d = angular_difference(est.states[t], truth.states[t], angular);
    if (components.empty()) {
      acc += d.squaredNorm();
    } else {
      for (int c : components) acc += d[c] * d[c];
    }
    ++count;
  }
  if (count == 0) return 0.0;
  return std::sqrt(acc / static_cast<double>(count));
}

}  // namespace steinmap
