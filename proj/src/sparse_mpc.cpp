#include "srollout/sparse_mpc.hpp"

#include <algorithm>
#include <cmath>

namespace srollout {

double MpcProblem::objective(const VectorXd& u, const VectorXd& f) const {
  double reg = 0.0;
  for (int i = 0; i < horizon; ++i) {
    reg += u.segment(i * group_size, group_size).norm();
  }
  return 0.5 * u.dot(hessian * u) + f.dot(u) + group_weight * reg;
}

MpcProblem build_mpc_problem(const MatrixXd& a, const MatrixXd& b,
                             const MatrixXd& q_weight, const MatrixXd& r_weight,
                             const MatrixXd& terminal, int horizon,
                             double theta) {
  if (horizon < 1) throw ValidationError("mpc horizon must be >= 1");
  if (theta < 0.0) throw ValidationError("mpc group weight must be >= 0");
  const auto n = a.rows();
  const auto q = b.cols();
  const auto nu = q * horizon;

  // x_{i} = A^i x̂ + Σ_{j<i} A^{i-1-j} B u_j for i = 1..N
  MatrixXd free_resp(n * horizon, n);    // rows i-1: A^i
  MatrixXd forced_resp = MatrixXd::Zero(n * horizon, nu);
  MatrixXd a_pow = a;
  for (int i = 1; i <= horizon; ++i) {
    free_resp.middleRows((i - 1) * n, n) = a_pow;
    a_pow = a * a_pow;
  }
  for (int i = 1; i <= horizon; ++i) {
    MatrixXd reach = b;  // A^{i-1-j} B, starting from j = i-1
    for (int j = i - 1; j >= 0; --j) {
      forced_resp.block((i - 1) * n, j * q, n, q) = reach;
      reach = a * reach;
    }
  }
  MatrixXd state_w = MatrixXd::Zero(n * horizon, n * horizon);
  for (int i = 1; i < horizon; ++i) {
    state_w.block((i - 1) * n, (i - 1) * n, n, n) = q_weight;
  }
  state_w.block((horizon - 1) * n, (horizon - 1) * n, n, n) = terminal;
  MatrixXd input_w = MatrixXd::Zero(nu, nu);
  for (int i = 0; i < horizon; ++i) input_w.block(i * q, i * q, q, q) = r_weight;

  MpcProblem prob;
  prob.horizon = horizon;
  prob.group_size = static_cast<int>(q);
  prob.group_weight = theta;
  prob.terminal_weight = terminal;
  prob.hessian = linalg::symmetrize(
      2.0 * (forced_resp.transpose() * state_w * forced_resp + input_w));
  prob.linear_map = 2.0 * forced_resp.transpose() * state_w * free_resp;
  prob.constant_map = linalg::symmetrize(
      q_weight + free_resp.transpose() * state_w * free_resp);
  if (!linalg::is_pd(prob.hessian)) {
    throw ValidationError("mpc: condensed Hessian is not positive definite");
  }
  prob.strong_convexity = linalg::min_eigenvalue(prob.hessian);
  return prob;
}

VectorXd block_soft_threshold(const VectorXd& v, double kappa) {
  if (kappa < 0.0) throw ValidationError("block_soft_threshold: kappa < 0");
  const double norm = v.norm();
  if (norm <= kappa) return VectorXd::Zero(v.size());
  return (1.0 - kappa / norm) * v;
}

namespace {

/// Per-block norms of the minimum-norm subgradient of the objective at u.
VectorXd block_violations(const MatrixXd& h, const VectorXd& f,
                          const VectorXd& u, int group_size, double theta) {
  const VectorXd grad = h * u + f;
  const auto groups = u.size() / group_size;
  VectorXd viol(groups);
  for (Eigen::Index i = 0; i < groups; ++i) {
    const VectorXd gi = grad.segment(i * group_size, group_size);
    const VectorXd ui = u.segment(i * group_size, group_size);
    const double un = ui.norm();
    viol(i) = un == 0.0 ? std::max(0.0, gi.norm() - theta)
                        : (gi + theta * ui / un).norm();
  }
  return viol;
}

}  // namespace

double group_lasso_kkt_residual(const MatrixXd& h, const VectorXd& f,
                                const VectorXd& u, int group_size,
                                double theta) {
  const VectorXd viol = block_violations(h, f, u, group_size, theta);
  return viol.size() == 0 ? 0.0 : viol.maxCoeff();
}

MpcSolution solve_sparse_mpc(const MpcProblem& prob, const VectorXd& estimate,
                             const AdmmOptions& opts, const AdmmState* warm) {
  if (!estimate.allFinite()) {
    throw NonFinite("solve_sparse_mpc: estimate is not finite");
  }
  if (!(opts.penalty > 0.0)) {
    throw ValidationError("solve_sparse_mpc: penalty must be positive");
  }
  const auto nu = prob.hessian.rows();
  const int g = prob.group_size;
  const double rho = opts.penalty;
  const double kappa = prob.group_weight / rho;
  const VectorXd f = prob.linear_term(estimate);

  const double mu = prob.strong_convexity > 0.0
                       ? prob.strong_convexity
                       : linalg::min_eigenvalue(prob.hessian);
  if (!(mu > 0.0)) {
    throw ValidationError("solve_sparse_mpc: Hessian is not positive definite");
  }
  const MatrixXd system = prob.hessian + rho * MatrixXd::Identity(nu, nu);
  const Eigen::LLT<MatrixXd> llt(system);

  AdmmState st;
  st.penalty = rho;
  if (warm && warm->auxiliary.size() == nu && warm->dual.size() == nu) {
    st.auxiliary = warm->auxiliary;
    st.dual = warm->dual;
  } else {
    st.auxiliary = VectorXd::Zero(nu);
    st.dual = VectorXd::Zero(nu);
  }
  st.primal = st.auxiliary;

  MpcSolution sol;
  VectorXd z_old(nu);
  VectorXd relaxed(nu);
  VectorXd shifted(nu);
  for (int it = 1; it <= opts.max_iterations; ++it) {
    z_old = st.auxiliary;
    st.primal = llt.solve(rho * (st.auxiliary - st.dual) - f);
    relaxed = opts.over_relaxation * st.primal +
              (1.0 - opts.over_relaxation) * z_old;
    shifted = relaxed + st.dual;
    for (int i = 0; i < prob.horizon; ++i) {
      st.auxiliary.segment(i * g, g) =
          block_soft_threshold(shifted.segment(i * g, g), kappa);
    }
    st.dual += relaxed - st.auxiliary;
    st.primal_residual = (st.primal - st.auxiliary).norm();
    st.dual_residual = rho * (st.auxiliary - z_old).norm();
    if (opts.log_objective) {
      sol.objective_log.push_back(prob.objective(st.auxiliary, f));
    }
    if (st.primal_residual < opts.tolerance &&
        st.dual_residual < opts.tolerance) {
      // Small splitting residuals alone do not bound the distance to the
      // optimum; strong convexity turns the subgradient residual into one.
      const VectorXd viol = block_violations(prob.hessian, f, st.auxiliary, g,
                                             prob.group_weight);
      const double kkt = viol.maxCoeff();
      const double dist_bound = viol.norm() / mu;
      if (kkt <= std::min(opts.tolerance, opts.kkt_tolerance) &&
          dist_bound <= opts.tolerance * std::max(1.0, st.auxiliary.norm())) {
        sol.inputs = st.auxiliary;
        sol.iterations = it;
        sol.kkt_residual = kkt;
        sol.state = st;
        return sol;
      }
    }
  }
  throw NonConvergence("solve_sparse_mpc: ADMM iteration limit reached",
                       std::max(st.primal_residual, st.dual_residual));
}

SparseMpcController::SparseMpcController(
    std::shared_ptr<const MpcProblem> problem, AdmmOptions opts,
    double zero_tol)
    : problem_(std::move(problem)), opts_(opts), zero_tol_(zero_tol) {}

Decision SparseMpcController::decide(const EstimatorState& est) {
  const MpcSolution sol =
      solve_sparse_mpc(*problem_, est.estimate, opts_, warm_ ? &*warm_ : nullptr);
  ++solves_;
  worst_kkt_ = std::max(worst_kkt_, sol.kkt_residual);

  // Shift the solution one block for the next step.
  const int g = problem_->group_size;
  const auto nu = sol.inputs.size();
  AdmmState next = sol.state;
  next.auxiliary.head(nu - g) = sol.state.auxiliary.tail(nu - g);
  next.auxiliary.tail(g).setZero();
  next.dual.head(nu - g) = sol.state.dual.tail(nu - g);
  next.dual.tail(g).setZero();
  warm_ = std::move(next);

  Decision d;
  d.input = sol.inputs.head(g);
  d.trigger = d.input.norm() > zero_tol_ ? 1 : 0;
  if (!d.trigger) d.input.setZero();
  return d;
}

std::unique_ptr<Controller> SparseMpcController::clone() const {
  return std::make_unique<SparseMpcController>(problem_, opts_, zero_tol_);
}

Decision mpc_controller_step(const EstimatorState& est, const MpcProblem& prob,
                             const AdmmOptions& opts, double zero_tol) {
  const MpcSolution sol = solve_sparse_mpc(prob, est.estimate, opts);
  Decision d;
  d.input = sol.inputs.head(prob.group_size);
  d.trigger = d.input.norm() > zero_tol ? 1 : 0;
  if (!d.trigger) d.input.setZero();
  return d;
}

}  // namespace srollout
