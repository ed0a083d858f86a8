#pragma once

#include <cstdint>

#include "srollout/types.hpp"

namespace srollout {

enum class NoiseStream : std::uint64_t {
  kInitialState = 0,
  kProcess = 1,
  kMeasurement = 2,
};

/// Stateless Gaussian source: every draw is a pure function of
/// (seed, trial, step, stream, component), so the schedule of trials across
/// threads cannot change the numbers.
class CounterNormal {
 public:
  explicit CounterNormal(std::uint64_t seed) : seed_(seed) {}

  VectorXd standard(std::uint64_t trial, std::uint64_t step, NoiseStream stream,
                    int dim) const;

  static std::uint64_t mix(std::uint64_t x);

 private:
  std::uint64_t seed_;
};

/// Factor L with LLᵀ = cov (Cholesky, or a symmetric square root when the
/// matrix is only semidefinite).
MatrixXd covariance_factor(const MatrixXd& cov);

}  // namespace srollout
