#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace steinmap {

using Rng = std::mt19937_64;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Maps an angle to [-pi, pi). std::remainder is exact, so the map is idempotent.
inline double wrap_angle(double theta) {
  double r = std::remainder(theta, kTwoPi);
  if (r >= kPi) r -= kTwoPi;
  if (r < -kPi) r += kTwoPi;
  return r;
}

/// a - b with the listed components taken on the circle.
template <class Vec>
Vec angular_difference(const Vec& a, const Vec& b, std::span<const int> angular) {
  Vec d = a - b;
  for (int k : angular) d[k] = wrap_angle(d[k]);
  return d;
}

template <class Vec>
void wrap_components(Vec& v, std::span<const int> angular) {
  for (int k : angular) v[k] = wrap_angle(v[k]);
}

/// One measurement vector. Components whose mask entry is zero are ignored by every
/// likelihood; an empty mask means all components are valid.
struct Observation {
  Eigen::VectorXd values;
  std::vector<std::uint8_t> valid;
  int time_index = 0;

  Eigen::Index size() const { return values.size(); }
  bool is_valid(Eigen::Index i) const { return valid.empty() || valid[static_cast<std::size_t>(i)] != 0; }
  int num_valid() const {
    int n = 0;
    for (Eigen::Index i = 0; i < size(); ++i) n += is_valid(i) ? 1 : 0;
    return n;
  }
};

/// A time-indexed state sequence, states[0] is the initial state.
template <class State>
struct Trajectory {
  std::vector<State> states;
  double score = 0.0;
  /// Particle index chosen at t = 1..T (empty for estimators that do not select particles).
  std::vector<int> indices;
  bool diverged = false;

  std::size_t horizon() const { return states.empty() ? 0 : states.size() - 1; }
};

/// Free-form notes raised by estimators instead of failing (regularizations, weight resets).
struct Diagnostics {
  std::vector<std::string> messages;
  void note(std::string m) { messages.push_back(std::move(m)); }
};

inline void note(Diagnostics* d, std::string m) {
  if (d != nullptr) d->note(std::move(m));
}

}  // namespace steinmap
