#pragma once

#include <optional>

#include "srollout/types.hpp"

namespace srollout {

/// dx = (A x + B u) dt + D dw,  dy = C x dt + dv, with unit-intensity scalar
/// (or vector) Wiener process w and measurement intensity E for v.
struct ContinuousModel {
  MatrixXd a_cont;
  MatrixXd b_cont;
  MatrixXd d_cont;
  MatrixXd c_cont;
  MatrixXd meas_noise_intensity;

  void validate() const;
};

/// x_{k+1} = A x_k + B u_k + w_k,  y_k = C x_k + v_k.
struct DiscreteModel {
  MatrixXd a;
  MatrixXd b;
  MatrixXd c;
  MatrixXd proc_cov;  // Ω_w
  MatrixXd meas_cov;  // Ω_v
  VectorXd init_mean;
  MatrixXd init_cov;
  std::optional<double> sample_period;

  int states() const { return static_cast<int>(a.rows()); }
  int inputs() const { return static_cast<int>(b.cols()); }
  int outputs() const { return static_cast<int>(c.rows()); }

  /// `require_pd_noise` can be switched off for noise-free test plants.
  void validate(bool require_pd_noise = true) const;
};

/// Period-p lifted dynamics x_{(l+1)p} = A^p x_{lp} + B_p u_{lp} + D_p w̄_l
/// and the per-block cost c_p(x, u) = xᵀQ_p x + 2xᵀS_p u + uᵀR_p u.
struct LiftedSystem {
  int period = 1;
  MatrixXd a_lift;          // A^p
  MatrixXd b_lift;          // A^{p-1}B
  MatrixXd d_lift;          // [A^{p-1} ... A I]
  MatrixXd proc_cov_lift;   // I_p ⊗ Ω_w
  MatrixXd q_lift;
  MatrixXd s_lift;
  MatrixXd r_lift;
  double d_disc = 0.0;      // intra-block noise cost, discounted (∞ at α = 1, p > 1)
  double d_avg = 0.0;       // intra-block noise cost per block, undiscounted
  double alpha = 1.0;

  double block_cost(const VectorXd& x, const VectorXd& u) const;
};

/// Exact zero-order-hold discretization; Ω_w by the augmented-matrix
/// exponential and Ω_v = E / t_s. Initial mean/covariance are left at zero.
DiscreteModel discretize(const ContinuousModel& cm, double ts);

/// Matrix exponential with a round-trip accuracy check (exp(M)exp(−M) ≈ I).
MatrixXd checked_expm(const MatrixXd& m);

LiftedSystem build_lifted(const DiscreteModel& dm, const MatrixXd& q_weight,
                          const MatrixXd& r_weight, int p, double alpha);

/// The two-mass spring benchmark (m1 = m2 = 1, κ = 2π², noise on mass 1).
ContinuousModel build_benchmark_model();

/// Benchmark state weight (4×4) and input weight (1×1, 0.1).
MatrixXd benchmark_state_weight();
MatrixXd benchmark_input_weight();
VectorXd benchmark_initial_mean();
inline constexpr double kBenchmarkSamplePeriod = 0.1;

}  // namespace srollout
