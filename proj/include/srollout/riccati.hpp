#pragma once

#include "srollout/types.hpp"

namespace srollout {

/// Data of the (possibly discounted) infinite-horizon LQ problem
///
///   P = Q + γAᵀPA − (γAᵀPB + S)(γBᵀPB + R)⁻¹(γBᵀPA + Sᵀ),
///
/// where γ is `discount`. For a period-p lifted problem the caller passes
/// γ = α^p together with the lifted matrices.
struct RiccatiProblem {
  MatrixXd state_matrix;
  MatrixXd input_matrix;
  MatrixXd state_weight;
  MatrixXd cross_weight;  // n×q, may be left empty for S = 0
  MatrixXd input_weight;
  double discount = 1.0;

  /// Throws ValidationError when dimensions or weight definiteness are off.
  void validate() const;
};

struct RiccatiSolution {
  MatrixXd cost_matrix;  // P̃
  MatrixXd gain;         // F̃, u = F̃x
  double residual_norm = 0.0;
  int iterations = 0;

  /// Fᵀ(γBᵀPB + R)F, the quadratic weight of the certainty-equivalence loss.
  MatrixXd gain_quadratic(const RiccatiProblem& prob) const;
};

struct RiccatiOptions {
  double tolerance = 1e-10;
  int max_iterations = 100000;
  /// Upper bound on cond(γBᵀPB + R) before IllConditioned is raised.
  double max_condition = 1e12;
};

/// One application of the Riccati map to `p`; also returns the gain.
MatrixXd riccati_map(const RiccatiProblem& prob, const MatrixXd& p,
                     MatrixXd* gain = nullptr);

/// Relative Frobenius residual ‖map(P) − P‖ / max(1, ‖P‖).
double riccati_residual(const RiccatiProblem& prob, const MatrixXd& p);

/// Fixed-point iteration of the Riccati map from P = Q, symmetrizing after
/// every step. Throws NonConvergence or IllConditioned.
RiccatiSolution solve_dare(const RiccatiProblem& prob,
                           const RiccatiOptions& opts = {});

inline constexpr double kRankTolerance = 1e-9;
inline constexpr double kEigenTolerance = 1e-9;

/// Numeric rank with threshold `rel_tol · σ_max`.
int numeric_rank(const MatrixXd& m, double rel_tol = kRankTolerance);

bool check_observability(const MatrixXd& a, const MatrixXd& c_half);
bool check_controllability(const MatrixXd& a, const MatrixXd& b);

/// True when no two distinct eigenvalues of `a` are mapped onto each other by
/// a p-th root of unity, i.e. (A^p, B_p) keeps the stabilizability of (A, B).
bool check_pathological_sampling(const MatrixXd& a, int p,
                                 double tol = kEigenTolerance);

/// Observability of (A^p, Q_p^{1/2}) with Q_p = Σ_{i<p} (Aⁱ)ᵀQAⁱ.
bool check_lifted_observability(const MatrixXd& a, const MatrixXd& q_weight,
                                int p);

}  // namespace srollout
