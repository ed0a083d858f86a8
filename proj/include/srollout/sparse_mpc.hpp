#pragma once

#include <optional>
#include <vector>

#include "srollout/controller.hpp"

namespace srollout {

/// Condensed group-lasso MPC problem
///
///   min_u ½uᵀHu + (F x̂)ᵀu + θ Σᵢ ‖uᵢ‖₂
///
/// over the stacked input sequence u = (u₀, …, u_{N−1}), obtained from
/// Σᵢ xᵢᵀQxᵢ + uᵢᵀRuᵢ + x_NᵀP x_N with xᵢ predicted from x₀ = x̂.
struct MpcProblem {
  int horizon = 1;
  int group_size = 1;
  double group_weight = 0.0;  // θ
  MatrixXd hessian;           // H
  MatrixXd linear_map;        // F, so f = F x̂
  MatrixXd constant_map;      // x̂ᵀ C x̂ is the u-independent cost
  MatrixXd terminal_weight;
  double strong_convexity = 0.0;  // λ_min(H); computed on demand when 0

  VectorXd linear_term(const VectorXd& estimate) const {
    return linear_map * estimate;
  }
  double objective(const VectorXd& u, const VectorXd& f) const;
};

MpcProblem build_mpc_problem(const MatrixXd& a, const MatrixXd& b,
                             const MatrixXd& q_weight, const MatrixXd& r_weight,
                             const MatrixXd& terminal, int horizon,
                             double theta);

struct AdmmOptions {
  double penalty = 1.0;
  double tolerance = 1e-8;
  int max_iterations = 10000;
  double over_relaxation = 1.6;
  double kkt_tolerance = 1e-6;
  bool log_objective = false;
};

struct AdmmState {
  VectorXd primal;      // u
  VectorXd auxiliary;   // z
  VectorXd dual;        // scaled multiplier
  double penalty = 1.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

struct MpcSolution {
  VectorXd inputs;  // the auxiliary iterate: zero blocks are exact zeros
  int iterations = 0;
  double kkt_residual = 0.0;
  AdmmState state;
  std::vector<double> objective_log;
};

/// max(0, 1 − κ/‖v‖)·v.
VectorXd block_soft_threshold(const VectorXd& v, double kappa);

/// Largest violation of the block subgradient optimality conditions at `u`.
double group_lasso_kkt_residual(const MatrixXd& h, const VectorXd& f,
                                const VectorXd& u, int group_size,
                                double theta);

/// Over-relaxed scaled ADMM on the split u = z. `warm` seeds (z, dual).
/// Stops once both splitting residuals are below `tolerance`, the block
/// subgradient conditions hold to min(tolerance, kkt_tolerance), and the
/// strong-convexity bound ‖u − u*‖ ≤ dist(0, ∂J(u))/λ_min(H) certifies the
/// iterate to `tolerance`·max(1, ‖u‖); throws NonConvergence when that is not
/// reached within `max_iterations`.
MpcSolution solve_sparse_mpc(const MpcProblem& prob, const VectorXd& estimate,
                             const AdmmOptions& opts = {},
                             const AdmmState* warm = nullptr);

/// Receding-horizon group-lasso MPC; applies the first block, warm-starting
/// from the shifted previous solution.
class SparseMpcController final : public Controller {
 public:
  SparseMpcController(std::shared_ptr<const MpcProblem> problem,
                      AdmmOptions opts, double zero_tol = 1e-9);

  Decision decide(const EstimatorState& est) override;
  std::unique_ptr<Controller> clone() const override;

  /// Worst KKT residual over all accepted solves so far.
  double worst_kkt_residual() const { return worst_kkt_; }
  long solves() const { return solves_; }

 private:
  std::shared_ptr<const MpcProblem> problem_;
  AdmmOptions opts_;
  double zero_tol_;
  std::optional<AdmmState> warm_;
  double worst_kkt_ = 0.0;
  long solves_ = 0;
};

/// mpc_controller_step: one receding-horizon decision without warm start.
Decision mpc_controller_step(const EstimatorState& est, const MpcProblem& prob,
                             const AdmmOptions& opts = {},
                             double zero_tol = 1e-9);

}  // namespace srollout
