#include "srollout/noise.hpp"

#include <cmath>
#include <numbers>

namespace srollout {

std::uint64_t CounterNormal::mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

VectorXd CounterNormal::standard(std::uint64_t trial, std::uint64_t step,
                                 NoiseStream stream, int dim) const {
  std::uint64_t key = mix(seed_);
  key = mix(key ^ trial);
  key = mix(key ^ step);
  key = mix(key ^ static_cast<std::uint64_t>(stream));
  VectorXd out(dim);
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  for (int i = 0; i < dim; i += 2) {
    const std::uint64_t r1 = mix(key + 2 * static_cast<std::uint64_t>(i));
    const std::uint64_t r2 = mix(key + 2 * static_cast<std::uint64_t>(i) + 1);
    // u1 in (0, 1], u2 in [0, 1)
    const double u1 = (static_cast<double>(r1 >> 11) + 1.0) * kScale;
    const double u2 = static_cast<double>(r2 >> 11) * kScale;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out(i) = radius * std::cos(angle);
    if (i + 1 < dim) out(i + 1) = radius * std::sin(angle);
  }
  return out;
}

MatrixXd covariance_factor(const MatrixXd& cov) {
  const MatrixXd sym = linalg::symmetrize(cov);
  if (sym.size() == 0) return sym;
  Eigen::LLT<MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  return linalg::psd_sqrt(sym);
}

}  // namespace srollout
