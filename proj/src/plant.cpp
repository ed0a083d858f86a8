#include "srollout/plant.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

namespace srollout {

void ContinuousModel::validate() const {
  const auto n = a_cont.rows();
  if (a_cont.cols() != n || b_cont.rows() != n || d_cont.rows() != n ||
      c_cont.cols() != n || meas_noise_intensity.rows() != c_cont.rows() ||
      meas_noise_intensity.cols() != c_cont.rows()) {
    throw ValidationError("continuous model: inconsistent dimensions");
  }
  if (!linalg::is_psd(meas_noise_intensity)) {
    throw ValidationError(
        "continuous model: measurement intensity must be symmetric PSD");
  }
}

void DiscreteModel::validate(bool require_pd_noise) const {
  const auto n = a.rows();
  const auto m = c.rows();
  if (a.cols() != n || b.rows() != n || c.cols() != n ||
      proc_cov.rows() != n || proc_cov.cols() != n || meas_cov.rows() != m ||
      meas_cov.cols() != m || init_mean.size() != n || init_cov.rows() != n ||
      init_cov.cols() != n) {
    throw ValidationError("discrete model: inconsistent dimensions");
  }
  if (require_pd_noise) {
    if (!linalg::is_pd(proc_cov)) {
      throw ValidationError("discrete model: process covariance must be PD");
    }
    if (!linalg::is_pd(meas_cov)) {
      throw ValidationError(
          "discrete model: measurement covariance must be PD");
    }
  }
  if (!linalg::is_psd(init_cov)) {
    throw ValidationError("discrete model: initial covariance must be PSD");
  }
}

double LiftedSystem::block_cost(const VectorXd& x, const VectorXd& u) const {
  return x.dot(q_lift * x) + 2.0 * x.dot(s_lift * u) + u.dot(r_lift * u);
}

MatrixXd checked_expm(const MatrixXd& m) {
  const MatrixXd e = m.exp();
  const MatrixXd e_inv = (-m).exp();
  const auto n = m.rows();
  const double err =
      (e * e_inv - MatrixXd::Identity(n, n)).norm() / static_cast<double>(n);
  // Round-trip error scales with the condition of exp(M).
  const double cond = e.norm() * e_inv.norm();
  if (!e.allFinite() || err > 1e-13 * std::max(1.0, cond)) {
    throw IllConditioned("matrix exponential failed its accuracy check");
  }
  return e;
}

DiscreteModel discretize(const ContinuousModel& cm, double ts) {
  if (!(ts > 0.0)) throw ValidationError("discretize: ts must be positive");
  cm.validate();
  const auto n = cm.a_cont.rows();
  const auto q = cm.b_cont.cols();

  MatrixXd zoh = MatrixXd::Zero(n + q, n + q);
  zoh.topLeftCorner(n, n) = cm.a_cont * ts;
  zoh.topRightCorner(n, q) = cm.b_cont * ts;
  const MatrixXd zoh_exp = checked_expm(zoh);

  // Van Loan: exp([[-A, DDᵀ], [0, Aᵀ]] ts) = [[·, F12], [0, F22]],
  // Ω_w = F22ᵀ F12.
  MatrixXd vl = MatrixXd::Zero(2 * n, 2 * n);
  vl.topLeftCorner(n, n) = -cm.a_cont * ts;
  vl.topRightCorner(n, n) = cm.d_cont * cm.d_cont.transpose() * ts;
  vl.bottomRightCorner(n, n) = cm.a_cont.transpose() * ts;
  const MatrixXd vl_exp = checked_expm(vl);
  const MatrixXd f12 = vl_exp.topRightCorner(n, n);
  const MatrixXd f22 = vl_exp.bottomRightCorner(n, n);

  DiscreteModel dm;
  dm.a = zoh_exp.topLeftCorner(n, n);
  dm.b = zoh_exp.topRightCorner(n, q);
  dm.c = cm.c_cont;
  dm.proc_cov = linalg::symmetrize(f22.transpose() * f12);
  dm.meas_cov = cm.meas_noise_intensity / ts;
  dm.init_mean = VectorXd::Zero(n);
  dm.init_cov = MatrixXd::Zero(n, n);
  dm.sample_period = ts;
  return dm;
}

LiftedSystem build_lifted(const DiscreteModel& dm, const MatrixXd& q_weight,
                          const MatrixXd& r_weight, int p, double alpha) {
  if (p < 1) throw ValidationError("build_lifted: p must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ValidationError("build_lifted: alpha must lie in (0, 1]");
  }
  const auto n = dm.a.rows();
  const auto q = dm.b.cols();
  if (q_weight.rows() != n || q_weight.cols() != n || r_weight.rows() != q ||
      r_weight.cols() != q) {
    throw ValidationError("build_lifted: weight dimensions do not match model");
  }

  // a_pow[i] = A^i for i = 0..p
  std::vector<MatrixXd> a_pow(p + 1);
  a_pow[0] = MatrixXd::Identity(n, n);
  for (int i = 1; i <= p; ++i) a_pow[i] = dm.a * a_pow[i - 1];

  LiftedSystem ls;
  ls.period = p;
  ls.alpha = alpha;
  ls.a_lift = a_pow[p];
  ls.b_lift = a_pow[p - 1] * dm.b;
  ls.d_lift.resize(n, n * p);
  for (int i = 0; i < p; ++i) ls.d_lift.middleCols(i * n, n) = a_pow[p - 1 - i];
  ls.proc_cov_lift = MatrixXd::Zero(n * p, n * p);
  for (int i = 0; i < p; ++i) {
    ls.proc_cov_lift.block(i * n, i * n, n, n) = dm.proc_cov;
  }

  ls.q_lift = MatrixXd::Zero(n, n);
  ls.s_lift = MatrixXd::Zero(n, q);
  ls.r_lift = r_weight;
  for (int i = 0; i < p; ++i) {
    ls.q_lift += a_pow[i].transpose() * q_weight * a_pow[i];
  }
  for (int i = 1; i < p; ++i) {
    const MatrixXd reach = a_pow[i - 1] * dm.b;
    ls.s_lift += a_pow[i].transpose() * q_weight * reach;
    ls.r_lift += reach.transpose() * q_weight * reach;
  }
  ls.q_lift = linalg::symmetrize(ls.q_lift);
  ls.r_lift = linalg::symmetrize(ls.r_lift);

  // noise_trace[j] = tr(Q A^j Ω_w (A^j)ᵀ)
  std::vector<double> noise_trace(p);
  for (int j = 0; j < p; ++j) {
    noise_trace[j] =
        (q_weight * a_pow[j] * dm.proc_cov * a_pow[j].transpose()).trace();
  }
  double d_avg = 0.0;
  double d_disc_sum = 0.0;
  double inner = 0.0;
  for (int i = 1; i < p; ++i) {
    inner += noise_trace[i - 1];
    d_avg += inner;
    d_disc_sum += std::pow(alpha, i) * inner;
  }
  ls.d_avg = d_avg;
  if (p == 1) {
    ls.d_disc = 0.0;
  } else if (alpha == 1.0) {
    ls.d_disc = std::numeric_limits<double>::infinity();
  } else {
    ls.d_disc = d_disc_sum / (1.0 - std::pow(alpha, p));
  }
  return ls;
}

ContinuousModel build_benchmark_model() {
  constexpr double m1 = 1.0;
  constexpr double m2 = 1.0;
  constexpr double kappa = 2.0 * std::numbers::pi * std::numbers::pi;
  ContinuousModel cm;
  cm.a_cont = MatrixXd::Zero(4, 4);
  cm.a_cont(0, 2) = 1.0;
  cm.a_cont(1, 3) = 1.0;
  cm.a_cont(2, 0) = -kappa / m1;
  cm.a_cont(2, 1) = kappa / m1;
  cm.a_cont(3, 0) = kappa / m2;
  cm.a_cont(3, 1) = -kappa / m2;
  cm.b_cont = MatrixXd::Zero(4, 1);
  cm.b_cont(2, 0) = 1.0 / m1;
  cm.d_cont = MatrixXd::Zero(4, 1);
  cm.d_cont(2, 0) = 0.4;
  cm.c_cont = MatrixXd::Zero(2, 4);
  cm.c_cont(0, 0) = 1.0;
  cm.c_cont(1, 1) = 1.0;
  cm.meas_noise_intensity = 1e-5 * MatrixXd::Identity(2, 2);
  return cm;
}

MatrixXd benchmark_state_weight() {
  MatrixXd q(4, 4);
  q << 0.1336, -0.0936, -0.0327, 0.0347,
      -0.0936, 0.1336, 0.0347, -0.0327,
      -0.0327, 0.0347, 0.0377, 0.0024,
      0.0347, -0.0327, 0.0024, 0.0377;
  return q;
}

MatrixXd benchmark_input_weight() { return MatrixXd::Constant(1, 1, 0.1); }

VectorXd benchmark_initial_mean() {
  VectorXd x0(4);
  x0 << 1.0, -1.0, 0.0, 0.0;
  return x0;
}

}  // namespace srollout
