#pragma once

#include <vector>

#include "srollout/plant.hpp"
#include "srollout/rollout.hpp"

namespace srollout {

struct OracleResult {
  int best_pattern = 1;
  double best_score = 0.0;
  std::vector<double> all_scores;  // position m-1
};

/// Exhaustive evaluation of the h-step lookahead cost
///   E[Σ_i α^i (xᵢᵀQxᵢ + uᵢᵀRuᵢ + θδᵢ) + α^h x_hᵀP̃x_h | I_k]
/// for every schedule. Gains come from a dense batch least-squares solve of
/// each tail problem and the expectation from exact propagation of the joint
/// (estimate, error) moments through the stationary filter; no Riccati
/// recursion is used.
OracleResult oracle_select(const DiscreteModel& dm, const MatrixXd& q_weight,
                           const MatrixXd& r_weight, const MatrixXd& terminal,
                           int h, int p, double theta, double alpha,
                           const VectorXd& estimate, const MatrixXd& err_cov);

/// Expected lookahead cost of one schedule (see oracle_select).
double oracle_pattern_cost(const DiscreteModel& dm, const MatrixXd& q_weight,
                           const MatrixXd& r_weight, const MatrixXd& terminal,
                           const TriggerPattern& pattern, double theta,
                           double alpha, const VectorXd& estimate,
                           const MatrixXd& err_cov);

struct ClosedLoopMatrices {
  MatrixXd phi;    // Θ_{h-1}···Θ_0
  MatrixXd gamma;  // [Θ_{h-1}···Θ_1, …, Θ_{h-1}, I]
};

/// Block-to-block estimate dynamics x̂_{(l+1)h} = Φ_m x̂_{lh} + Γ_m ω̄_l with
/// Θ_i = A + ρ_i B F_i.
ClosedLoopMatrices closed_loop_matrices(const RolloutTables& tables, int m);

}  // namespace srollout
