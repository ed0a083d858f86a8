#include "srollout/periodic.hpp"

#include <cmath>
#include <string>

namespace srollout {

RiccatiProblem lifted_riccati_problem(const LiftedSystem& lift) {
  RiccatiProblem prob;
  prob.state_matrix = lift.a_lift;
  prob.input_matrix = lift.b_lift;
  prob.state_weight = lift.q_lift;
  prob.cross_weight = lift.s_lift;
  prob.input_weight = lift.r_lift;
  prob.discount = std::pow(lift.alpha, lift.period);
  return prob;
}

PeriodicDesign design_periodic(const DiscreteModel& dm, const MatrixXd& q_weight,
                               const MatrixXd& r_weight, int p, double alpha,
                               const RiccatiOptions& opts) {
  if (!check_pathological_sampling(dm.a, p)) {
    throw AssumptionViolated("period " + std::to_string(p) +
                             " is a pathological sampling period for A");
  }
  if (!check_observability(dm.a, linalg::psd_sqrt(q_weight))) {
    throw AssumptionViolated("(A, Q^1/2) is not observable");
  }
  PeriodicDesign out;
  out.lifted = build_lifted(dm, q_weight, r_weight, p, alpha);
  const RiccatiProblem prob = lifted_riccati_problem(out.lifted);
  const RiccatiSolution sol = solve_dare(prob, opts);
  out.policy.period = p;
  out.policy.discount = alpha;
  out.policy.cost_matrix = sol.cost_matrix;
  out.policy.feedback_gain = sol.gain;
  out.policy.gain_quadratic = sol.gain_quadratic(prob);
  out.policy.residual = sol.residual_norm;
  return out;
}

namespace {

double lifted_noise_trace(const PeriodicPolicy& pol, const LiftedSystem& lift) {
  return (pol.cost_matrix * lift.d_lift * lift.proc_cov_lift *
          lift.d_lift.transpose())
      .trace();
}

}  // namespace

double periodic_average_cost(const PeriodicPolicy& pol,
                             const LiftedSystem& lift, const MatrixXd& err_cov,
                             double theta) {
  const double p = pol.period;
  const double bracket = lifted_noise_trace(pol, lift) +
                         (pol.gain_quadratic * err_cov).trace() + lift.d_avg;
  return bracket / p + theta / p;
}

double periodic_discounted_cost(const PeriodicPolicy& pol,
                                const LiftedSystem& lift,
                                const VectorXd& x0_mean,
                                const std::vector<MatrixXd>& err_cov_seq,
                                double theta) {
  if (err_cov_seq.empty()) {
    throw ValidationError("periodic_discounted_cost: empty covariance sequence");
  }
  const double ap = std::pow(pol.discount, pol.period);
  if (!(ap < 1.0)) {
    throw ValidationError("periodic_discounted_cost: requires alpha < 1");
  }
  const MatrixXd& p_cost = pol.cost_matrix;
  double cost = x0_mean.dot(p_cost * x0_mean) +
                (p_cost * err_cov_seq.front()).trace();
  cost += ap / (1.0 - ap) * lifted_noise_trace(pol, lift);

  double series = 0.0;
  if (err_cov_seq.size() == 1) {
    series = (pol.gain_quadratic * err_cov_seq.front()).trace() / (1.0 - ap);
  } else {
    double weight = 1.0;
    bool truncated = false;
    for (const MatrixXd& sigma : err_cov_seq) {
      const double term = weight * (pol.gain_quadratic * sigma).trace();
      series += term;
      weight *= ap;
      if (std::abs(term) < 1e-14 * std::abs(series)) {
        truncated = true;
        break;
      }
    }
    if (!truncated) {
      // Remaining blocks reuse the last covariance of the sequence.
      series += weight * (pol.gain_quadratic * err_cov_seq.back()).trace() /
                (1.0 - ap);
    }
  }
  cost += series + lift.d_disc + theta / (1.0 - ap);
  return cost;
}

BestPeriodic best_periodic(const DiscreteModel& dm, const MatrixXd& q_weight,
                           const MatrixXd& r_weight,
                           const std::vector<int>& candidates,
                           const MatrixXd& err_cov, double theta) {
  if (candidates.empty()) {
    throw ValidationError("best_periodic: empty candidate set");
  }
  BestPeriodic best;
  best.cost = std::numeric_limits<double>::infinity();
  for (int p : candidates) {
    const PeriodicDesign d = design_periodic(dm, q_weight, r_weight, p, 1.0);
    const double c = periodic_average_cost(d.policy, d.lifted, err_cov, theta);
    best.all.emplace_back(p, c);
    if (c < best.cost || (c == best.cost && p < best.period)) {
      best.cost = c;
      best.period = p;
    }
  }
  return best;
}

}  // namespace srollout
