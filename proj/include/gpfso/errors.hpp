#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gpfso {

struct GpfsoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError final : GpfsoError {
  using GpfsoError::GpfsoError;
};

// Every particle carries zero weight: the run cannot continue.
struct AllWeightsZero final : GpfsoError {
  explicit AllWeightsZero(int64_t t)
      : GpfsoError("all particle weights are zero at step " + std::to_string(t)),
        step(t) {}
  int64_t step;
};

// The cloud covariance failed its Cholesky factorization even after
// diagonal regularization.
struct CovarianceNotPsd final : GpfsoError {
  using GpfsoError::GpfsoError;
};

struct InsufficientPoints final : GpfsoError {
  using GpfsoError::GpfsoError;
};

struct NonFiniteGradient final : GpfsoError {
  explicit NonFiniteGradient(int64_t t)
      : GpfsoError("non-finite gradient at step " + std::to_string(t)), step(t) {}
  int64_t step;
};

struct AllReplicationsFailed final : GpfsoError {
  using GpfsoError::GpfsoError;
};

}  // namespace gpfso
