#pragma once

#include "srollout/plant.hpp"

namespace srollout {

/// Stationary Kalman filter quantities.
struct SteadyKalman {
  MatrixXd gain;       // G = Σ̃Cᵀ(CΣ̃Cᵀ + Ω_v)⁻¹
  MatrixXd err_cov;    // Σ  (a posteriori)
  MatrixXd prior_cov;  // Σ̃  (a priori)
  double residual = 0.0;
  int iterations = 0;
};

struct EstimatorState {
  VectorXd estimate;
  MatrixXd err_cov;
  MatrixXd gain;
  MatrixXd prior_cov;
  long step_index = 0;
  /// True when gains are frozen at the stationary values (Σ_k ≡ Σ).
  bool stationary = true;
};

/// One step of the a priori covariance recursion
/// Σ⁻ ↦ AΣAᵀ + Ω_w with Σ = Σ⁻ − Σ⁻Cᵀ(CΣ⁻Cᵀ + Ω_v)⁻¹CΣ⁻.
MatrixXd filter_riccati_map(const DiscreteModel& dm, const MatrixXd& prior);

/// Relative residual of the filter Riccati equation at `prior`.
double filter_riccati_residual(const DiscreteModel& dm, const MatrixXd& prior);

/// Iterates the covariance recursion from Ω_{x0} until the relative step
/// falls below `tol`. Throws NonConvergence.
SteadyKalman steady_kalman(const DiscreteModel& dm, double tol = 1e-12,
                           int max_iterations = 1000000);

/// Returns a copy of `dm` whose initial covariance is the stationary a priori
/// covariance, which makes the filter stationary from k = 0.
DiscreteModel with_stationary_initial_covariance(const DiscreteModel& dm,
                                                 const SteadyKalman& steady);

/// Whether Ω_{x0} solves the filter Riccati equation to `tol`.
bool initial_covariance_is_stationary(const DiscreteModel& dm,
                                      double tol = 1e-8);

/// x̂₀ = x̄₀ + G₀(y₀ − Cx̄₀). Falls back to time-varying gains when Ω_{x0} is
/// not the stationary covariance.
EstimatorState kalman_init(const DiscreteModel& dm, const VectorXd& y0,
                           const SteadyKalman& steady);

/// x̂_{k+1} = Ax̂ + Bu + G(y_{k+1} − C(Ax̂ + Bu)).
EstimatorState kalman_step(const EstimatorState& st, const VectorXd& u,
                           const VectorXd& y_next, const DiscreteModel& dm);

}  // namespace srollout
