#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "steinmap/types.hpp"

namespace steinmap {

/// Generated ground truth, observations and the model that produced them.
template <class M>
struct ScenarioDataset {
  using State = typename M::State;

  std::string scenario;
  std::uint64_t seed = 0;
  M model;
  State x0;
  /// Diagonal of the initial covariance handed to Gaussian estimators.
  State initial_var;
  Trajectory<State> truth;  // t = 0..T
  std::vector<Observation> observations;  // t = 1..T
  std::map<std::string, double> params;
  std::vector<std::string> warnings;
  /// Generating landmark per step (Scenario B diagnostics only, never given to estimators).
  std::vector<int> association;
  /// 1 where an anchor was blocked at that step (Scenario C).
  std::vector<std::uint8_t> blocked;

  std::size_t horizon() const { return observations.size(); }
};

}  // namespace steinmap
