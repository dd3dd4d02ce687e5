#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace steinmap {

/// A caller broke a documented precondition (dimension mismatch, bad variance, NaN input).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite value where a finite one is required.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::ptrdiff_t index = -1)
      : std::runtime_error(what), index_(index) {}

  /// Offending component or particle index, -1 when not applicable.
  std::ptrdiff_t index() const noexcept { return index_; }

 private:
  std::ptrdiff_t index_;
};

/// No admissible path exists through the particle support (every final score is -inf).
class DecodeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exhaustive enumeration refused because the path count exceeds the bound.
class HorizonTooLarge : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Particle weights collapsed so resampling has nothing to draw from.
class DegenerateWeights : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A benchmark configuration that cannot be run (unknown estimator, bad count, bad scenario).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Output location missing or not writable.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace steinmap
