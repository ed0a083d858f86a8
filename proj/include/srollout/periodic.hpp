#pragma once

#include <vector>

#include "srollout/plant.hpp"
#include "srollout/riccati.hpp"

namespace srollout {

/// Optimal period-p control law u_k = F̃_p x̂_k at k ≡ 0 (mod p), zero
/// otherwise, designed on the lifted system.
struct PeriodicPolicy {
  int period = 1;
  MatrixXd feedback_gain;   // F̃_p
  MatrixXd cost_matrix;     // P̃_p
  MatrixXd gain_quadratic;  // M_p = F̃ᵀ(α^p B_pᵀP̃B_p + R_p)F̃
  double discount = 1.0;    // α
  double residual = 0.0;

  bool actuates(long k) const { return k % period == 0; }
};

struct PeriodicDesign {
  PeriodicPolicy policy;
  LiftedSystem lifted;
};

/// Riccati problem of the lifted system at discount α^p.
RiccatiProblem lifted_riccati_problem(const LiftedSystem& lift);

/// Throws AssumptionViolated if pathological sampling (lifting destroys
/// stabilizability) or an unobservable (A, Q^{1/2}) makes the lifted design
/// ill-posed.
PeriodicDesign design_periodic(const DiscreteModel& dm, const MatrixXd& q_weight,
                               const MatrixXd& r_weight, int p, double alpha,
                               const RiccatiOptions& opts = {});

/// (1/p)[tr(P̃ D_p Ω_w^{(p)} D_pᵀ) + tr(M_p Σ) + d^a(p)] + θ/p.
double periodic_average_cost(const PeriodicPolicy& pol,
                             const LiftedSystem& lift, const MatrixXd& err_cov,
                             double theta);

/// Discounted cost of the periodic policy started from x̂₀ = `x0_mean`.
/// `err_cov_seq` lists Σ_0, Σ_p, Σ_2p, …; a single entry means stationary.
double periodic_discounted_cost(const PeriodicPolicy& pol,
                                const LiftedSystem& lift,
                                const VectorXd& x0_mean,
                                const std::vector<MatrixXd>& err_cov_seq,
                                double theta);

struct BestPeriodic {
  int period = 1;
  double cost = 0.0;
  std::vector<std::pair<int, double>> all;  // (p, average cost) per candidate
};

/// Argmin of the average cost over `candidates`; smallest p on ties.
BestPeriodic best_periodic(const DiscreteModel& dm, const MatrixXd& q_weight,
                           const MatrixXd& r_weight,
                           const std::vector<int>& candidates,
                           const MatrixXd& err_cov, double theta);

}  // namespace srollout

#include "srollout/controller.hpp"

namespace srollout {

/// Applies F̃_p x̂_k whenever k ≡ 0 (mod p).
class PeriodicController final : public Controller {
 public:
  explicit PeriodicController(PeriodicPolicy policy)
      : policy_(std::move(policy)) {}

  Decision decide(const EstimatorState& est) override {
    Decision d;
    if (policy_.actuates(est.step_index)) {
      d.trigger = 1;
      d.input = policy_.feedback_gain * est.estimate;
    } else {
      d.input = VectorXd::Zero(policy_.feedback_gain.rows());
    }
    return d;
  }
  std::unique_ptr<Controller> clone() const override {
    return std::make_unique<PeriodicController>(policy_);
  }
  const PeriodicPolicy& policy() const { return policy_; }

 private:
  PeriodicPolicy policy_;
};

}  // namespace srollout
