#include "srollout/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <vector>
#include <complex>
#include <numbers>

namespace srollout {

namespace {

MatrixXd cross_or_zero(const RiccatiProblem& prob) {
  if (prob.cross_weight.size() == 0) {
    return MatrixXd::Zero(prob.state_matrix.rows(), prob.input_matrix.cols());
  }
  return prob.cross_weight;
}

}  // namespace

void RiccatiProblem::validate() const {
  const auto n = state_matrix.rows();
  const auto q = input_matrix.cols();
  if (state_matrix.cols() != n || input_matrix.rows() != n ||
      state_weight.rows() != n || state_weight.cols() != n ||
      input_weight.rows() != q || input_weight.cols() != q) {
    throw ValidationError("riccati: inconsistent matrix dimensions");
  }
  if (cross_weight.size() != 0 &&
      (cross_weight.rows() != n || cross_weight.cols() != q)) {
    throw ValidationError("riccati: cross weight must be n x q");
  }
  if (!(discount > 0.0 && discount <= 1.0)) {
    throw ValidationError("riccati: discount must lie in (0, 1]");
  }
  if (!linalg::is_psd(state_weight)) {
    throw ValidationError("riccati: state weight must be symmetric PSD");
  }
  if (q > 0 && !linalg::is_pd(input_weight)) {
    throw ValidationError("riccati: input weight must be symmetric PD");
  }
}

MatrixXd RiccatiSolution::gain_quadratic(const RiccatiProblem& prob) const {
  const MatrixXd& b = prob.input_matrix;
  const MatrixXd inner =
      prob.discount * b.transpose() * cost_matrix * b + prob.input_weight;
  return linalg::symmetrize(gain.transpose() * inner * gain);
}

MatrixXd riccati_map(const RiccatiProblem& prob, const MatrixXd& p,
                     MatrixXd* gain) {
  const MatrixXd& a = prob.state_matrix;
  const MatrixXd& b = prob.input_matrix;
  const double g = prob.discount;
  MatrixXd next = prob.state_weight + g * a.transpose() * p * a;
  if (b.cols() == 0) {
    if (gain) *gain = MatrixXd::Zero(0, a.rows());
    return linalg::symmetrize(next);
  }
  const MatrixXd inner = g * b.transpose() * p * b + prob.input_weight;
  const MatrixXd lin = g * b.transpose() * p * a + cross_or_zero(prob).transpose();
  Eigen::LDLT<MatrixXd> ldlt(inner);
  const MatrixXd f = -ldlt.solve(lin);
  if (gain) *gain = f;
  next += lin.transpose() * f;
  return linalg::symmetrize(next);
}

double riccati_residual(const RiccatiProblem& prob, const MatrixXd& p) {
  return (riccati_map(prob, p) - p).stableNorm() / std::max(1.0, p.stableNorm());
}

RiccatiSolution solve_dare(const RiccatiProblem& prob,
                           const RiccatiOptions& opts) {
  prob.validate();
  MatrixXd p = linalg::symmetrize(prob.state_weight);
  MatrixXd f;
  double residual = std::numeric_limits<double>::infinity();
  // The iteration contracts linearly (and oscillates for complex closed-loop
  // modes), so the distance to the fixed point is estimated from the decay
  // of windowed step maxima: error ≈ step·ρ/(1−ρ). The tolerance applies to
  // that estimate; steps at rounding level end the iteration regardless.
  constexpr int kWindow = 16;
  std::vector<double> steps;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    MatrixXd next = riccati_map(prob, p, &f);
    if (!next.allFinite()) {
      throw NonFinite("solve_dare: iterate diverged");
    }
    const double scale = std::max(1.0, next.stableNorm());
    residual = (next - p).stableNorm() / scale;
    if (!std::isfinite(residual)) throw NonFinite("solve_dare: iterate diverged");
    p = std::move(next);
    steps.push_back(residual);
    if (residual >= opts.tolerance) continue;
    bool converged = residual < 1e-15;
    if (!converged && steps.size() >= 2 * kWindow) {
      const auto last = steps.end();
      const double m1 = *std::max_element(last - kWindow, last);
      const double m0 = *std::max_element(last - 2 * kWindow, last - kWindow);
      if (m1 < 1e-14 || (m1 >= m0 && m1 < 1e-12)) {
        converged = true;  // rounding plateau
      } else if (m0 > 0.0 && m1 < m0) {
        const double rate = std::pow(m1 / m0, 1.0 / kWindow);
        converged = m1 * rate / (1.0 - rate) < opts.tolerance;
      }
    }
    if (converged) {
      RiccatiSolution sol;
      sol.cost_matrix = p;
      riccati_map(prob, p, &sol.gain);
      sol.residual_norm = riccati_residual(prob, p);
      sol.iterations = it;
      const auto& b = prob.input_matrix;
      if (b.cols() > 0) {
        const MatrixXd inner =
            prob.discount * b.transpose() * p * b + prob.input_weight;
        Eigen::JacobiSVD<MatrixXd> svd(inner);
        const auto& s = svd.singularValues();
        if (s(s.size() - 1) <= 0.0 ||
            s(0) / s(s.size() - 1) > opts.max_condition) {
          throw IllConditioned("solve_dare: input Hessian is ill-conditioned");
        }
      }
      return sol;
    }
  }
  throw NonConvergence("solve_dare: iteration limit reached", residual);
}

int numeric_rank(const MatrixXd& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * s(0)) ++rank;
  }
  return rank;
}

bool check_observability(const MatrixXd& a, const MatrixXd& c_half) {
  const auto n = a.rows();
  const auto m = c_half.rows();
  MatrixXd obs(n * m, n);
  MatrixXd block = c_half;
  for (Eigen::Index i = 0; i < n; ++i) {
    obs.middleRows(i * m, m) = block;
    block = block * a;
  }
  return numeric_rank(obs) == n;
}

bool check_controllability(const MatrixXd& a, const MatrixXd& b) {
  return check_observability(a.transpose(), b.transpose());
}

bool check_pathological_sampling(const MatrixXd& a, int p, double tol) {
  if (p < 1) throw ValidationError("pathological sampling: p must be >= 1");
  const Eigen::VectorXcd eig = a.eigenvalues();
  const double two_pi = 2.0 * std::numbers::pi;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    for (Eigen::Index j = 0; j < eig.size(); ++j) {
      if (std::abs(eig(i) - eig(j)) < tol) continue;  // same eigenvalue
      for (int q = 1; q < p; ++q) {
        const std::complex<double> root =
            std::polar(1.0, two_pi * static_cast<double>(q) / p);
        if (std::abs(eig(i) - eig(j) * root) < tol) return false;
      }
    }
  }
  return true;
}

bool check_lifted_observability(const MatrixXd& a, const MatrixXd& q_weight,
                                int p) {
  if (p < 1) throw ValidationError("lifted observability: p must be >= 1");
  const auto n = a.rows();
  MatrixXd q_lift = MatrixXd::Zero(n, n);
  MatrixXd a_pow = MatrixXd::Identity(n, n);
  for (int i = 0; i < p; ++i) {
    q_lift += a_pow.transpose() * q_weight * a_pow;
    a_pow = a * a_pow;
  }
  return check_observability(a_pow, linalg::psd_sqrt(q_lift));
}

}  // namespace srollout
