#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace srollout {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Base for every error raised by the library. `exit_code()` feeds the CLI
/// exit-code contract.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, int exit_code)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

/// Invalid input or configuration (dimension mismatch, non-PD weight, h mod p).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what, 2) {}
};

class HorizonMismatch : public ValidationError {
 public:
  explicit HorizonMismatch(const std::string& what) : ValidationError(what) {}
};

class AssumptionViolated : public ValidationError {
 public:
  explicit AssumptionViolated(const std::string& what)
      : ValidationError(what) {}
};

/// Numerical failure: iteration limits, ill-conditioned solves, overflow.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(what, 3) {}
};

class NonConvergence : public NumericalError {
 public:
  NonConvergence(const std::string& what, double residual)
      : NumericalError(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class IllConditioned : public NumericalError {
 public:
  explicit IllConditioned(const std::string& what) : NumericalError(what) {}
};

class NonFinite : public NumericalError {
 public:
  explicit NonFinite(const std::string& what) : NumericalError(what) {}
};

namespace linalg {

inline MatrixXd symmetrize(const MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

inline double min_eigenvalue(const MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(sym),
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline bool is_symmetric(const MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.norm());
  return (m - m.transpose()).norm() <= tol * scale;
}

inline bool is_psd(const MatrixXd& m, double tol = 1e-9) {
  return is_symmetric(m, 1e-9) && min_eigenvalue(m) >= -tol * std::max(1.0, m.norm());
}

inline bool is_pd(const MatrixXd& m) {
  return is_symmetric(m, 1e-9) && min_eigenvalue(m) > 0.0;
}

/// Symmetric PSD square root via eigendecomposition (negative eigenvalues
/// from round-off are clipped to zero).
inline MatrixXd psd_sqrt(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m));
  VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

inline bool all_finite(const MatrixXd& m) { return m.allFinite(); }

}  // namespace linalg
}  // namespace srollout
