#include "srollout/estimator.hpp"

#include <limits>

namespace srollout {

namespace {

struct Update {
  MatrixXd gain;
  MatrixXd posterior;
};

Update measurement_update(const DiscreteModel& dm, const MatrixXd& prior) {
  const MatrixXd innov = dm.c * prior * dm.c.transpose() + dm.meas_cov;
  Eigen::LDLT<MatrixXd> ldlt(innov);
  // G = Σ⁻Cᵀ S⁻¹ computed as (S⁻¹ C Σ⁻)ᵀ
  const MatrixXd gain = ldlt.solve(dm.c * prior).transpose();
  const MatrixXd post = linalg::symmetrize(prior - gain * dm.c * prior);
  return {gain, post};
}

}  // namespace

MatrixXd filter_riccati_map(const DiscreteModel& dm, const MatrixXd& prior) {
  const Update up = measurement_update(dm, prior);
  return linalg::symmetrize(dm.a * up.posterior * dm.a.transpose() +
                            dm.proc_cov);
}

double filter_riccati_residual(const DiscreteModel& dm, const MatrixXd& prior) {
  return (filter_riccati_map(dm, prior) - prior).stableNorm() /
         std::max(1e-300, prior.stableNorm());
}

SteadyKalman steady_kalman(const DiscreteModel& dm, double tol,
                           int max_iterations) {
  dm.validate();
  MatrixXd prior = linalg::symmetrize(dm.init_cov);
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iterations; ++it) {
    MatrixXd next = filter_riccati_map(dm, prior);
    if (!next.allFinite()) throw NonFinite("steady_kalman: diverged");
    residual = (next - prior).stableNorm() / std::max(1e-300, next.stableNorm());
    prior = std::move(next);
    if (residual < tol) {
      const Update up = measurement_update(dm, prior);
      SteadyKalman out;
      out.gain = up.gain;
      out.err_cov = up.posterior;
      out.prior_cov = prior;
      out.residual = filter_riccati_residual(dm, prior);
      out.iterations = it;
      return out;
    }
  }
  throw NonConvergence("steady_kalman: iteration limit reached", residual);
}

DiscreteModel with_stationary_initial_covariance(const DiscreteModel& dm,
                                                 const SteadyKalman& steady) {
  DiscreteModel out = dm;
  out.init_cov = steady.prior_cov;
  return out;
}

bool initial_covariance_is_stationary(const DiscreteModel& dm, double tol) {
  if (dm.init_cov.norm() == 0.0) return false;
  return filter_riccati_residual(dm, dm.init_cov) < tol;
}

EstimatorState kalman_init(const DiscreteModel& dm, const VectorXd& y0,
                           const SteadyKalman& steady) {
  EstimatorState st;
  st.step_index = 0;
  st.stationary = initial_covariance_is_stationary(dm);
  if (st.stationary) {
    st.gain = steady.gain;
    st.err_cov = steady.err_cov;
    st.prior_cov = steady.prior_cov;
  } else {
    const Update up = measurement_update(dm, dm.init_cov);
    st.gain = up.gain;
    st.err_cov = up.posterior;
    st.prior_cov = dm.init_cov;
  }
  st.estimate = dm.init_mean + st.gain * (y0 - dm.c * dm.init_mean);
  return st;
}

EstimatorState kalman_step(const EstimatorState& st, const VectorXd& u,
                           const VectorXd& y_next, const DiscreteModel& dm) {
  EstimatorState next;
  next.stationary = st.stationary;
  next.step_index = st.step_index + 1;
  if (st.stationary) {
    next.gain = st.gain;
    next.err_cov = st.err_cov;
    next.prior_cov = st.prior_cov;
  } else {
    next.prior_cov = linalg::symmetrize(
        dm.a * st.err_cov * dm.a.transpose() + dm.proc_cov);
    const Update up = measurement_update(dm, next.prior_cov);
    next.gain = up.gain;
    next.err_cov = up.posterior;
  }
  const VectorXd predicted = dm.a * st.estimate + dm.b * u;
  next.estimate = predicted + next.gain * (y_next - dm.c * predicted);
  return next;
}

}  // namespace srollout
