#include "srollout/dp_oracle.hpp"

#include <cmath>
#include <limits>

namespace srollout {

namespace {

/// Gain K with u_s = K x_s minimizing the deterministic tail cost from step s,
/// inputs allowed only where the schedule actuates. Built by condensing the
/// tail into one least-squares problem in the free inputs.
MatrixXd batch_tail_gain(const MatrixXd& a, const MatrixXd& b,
                         const MatrixXd& q_weight, const MatrixXd& r_weight,
                         const MatrixXd& terminal,
                         const std::vector<std::uint8_t>& bits, int s,
                         double alpha) {
  const auto n = a.rows();
  const auto q = b.cols();
  const int h = static_cast<int>(bits.size());
  std::vector<int> active;  // steps in [s, h) with inputs
  for (int i = s; i < h; ++i) {
    if (bits[i]) active.push_back(i);
  }
  const auto nu = static_cast<Eigen::Index>(active.size()) * q;

  // x_i = free_i x_s + forced_i u for i = s..h
  std::vector<MatrixXd> free_resp(h - s + 1);
  std::vector<MatrixXd> forced(h - s + 1, MatrixXd::Zero(n, nu));
  free_resp[0] = MatrixXd::Identity(n, n);
  for (int i = s; i < h; ++i) {
    const int r = i - s;
    free_resp[r + 1] = a * free_resp[r];
    forced[r + 1] = a * forced[r];
    for (std::size_t j = 0; j < active.size(); ++j) {
      if (active[j] == i) forced[r + 1].middleCols(j * q, q) += b;
    }
  }
  MatrixXd hess = MatrixXd::Zero(nu, nu);
  MatrixXd cross = MatrixXd::Zero(nu, n);
  double disc = 1.0;
  for (int i = s; i <= h; ++i) {
    const int r = i - s;
    const MatrixXd& w = (i == h) ? terminal : q_weight;
    hess += disc * forced[r].transpose() * w * forced[r];
    cross += disc * forced[r].transpose() * w * free_resp[r];
    if (i < h) {
      for (std::size_t j = 0; j < active.size(); ++j) {
        if (active[j] == i) hess.block(j * q, j * q, q, q) += disc * r_weight;
      }
    }
    disc *= alpha;
  }
  const MatrixXd sol = -hess.ldlt().solve(cross);  // nu × n
  return sol.topRows(q);  // active.front() == s
}

}  // namespace

double oracle_pattern_cost(const DiscreteModel& dm, const MatrixXd& q_weight,
                           const MatrixXd& r_weight, const MatrixXd& terminal,
                           const TriggerPattern& pattern, double theta,
                           double alpha, const VectorXd& estimate,
                           const MatrixXd& err_cov) {
  const MatrixXd& a = dm.a;
  const MatrixXd& b = dm.b;
  const MatrixXd& c = dm.c;
  const auto n = a.rows();
  const auto q = b.cols();
  const int h = static_cast<int>(pattern.bits.size());

  // Stationary filter gain consistent with the a posteriori covariance Σ.
  const MatrixXd prior = a * err_cov * a.transpose() + dm.proc_cov;
  const MatrixXd innov = c * prior * c.transpose() + dm.meas_cov;
  const MatrixXd gain = innov.ldlt().solve(c * prior).transpose();

  // z = (x̂, e): mean (x̂, 0), covariance blockdiag(0, Σ).
  VectorXd mean = VectorXd::Zero(2 * n);
  mean.head(n) = estimate;
  MatrixXd cov = MatrixXd::Zero(2 * n, 2 * n);
  cov.bottomRightCorner(n, n) = err_cov;

  // Noise (w_i, v_{i+1}) enters z as Nw w + Nv v.
  MatrixXd nw(2 * n, n);
  nw.topRows(n) = gain * c;
  nw.bottomRows(n) = MatrixXd::Identity(n, n) - gain * c;
  MatrixXd nv(2 * n, dm.meas_cov.rows());
  nv.topRows(n) = gain;
  nv.bottomRows(n) = -gain;
  const MatrixXd noise_cov = nw * dm.proc_cov * nw.transpose() +
                             nv * dm.meas_cov * nv.transpose();

  // x = x̂ + e
  MatrixXd sel(n, 2 * n);
  sel << MatrixXd::Identity(n, n), MatrixXd::Identity(n, n);

  const auto expect_quad = [&](const MatrixXd& w, const MatrixXd& lin) {
    // E[(lin z)ᵀ w (lin z)]
    const VectorXd mu = lin * mean;
    return mu.dot(w * mu) + (w * lin * cov * lin.transpose()).trace();
  };

  double total = 0.0;
  double disc = 1.0;
  for (int i = 0; i < h; ++i) {
    MatrixXd k = MatrixXd::Zero(q, n);
    if (pattern.bits[i]) {
      k = batch_tail_gain(a, b, q_weight, r_weight, terminal, pattern.bits, i,
                          alpha);
    }
    MatrixXd u_lin = MatrixXd::Zero(q, 2 * n);
    u_lin.leftCols(n) = k;
    total += disc * (expect_quad(q_weight, sel) + expect_quad(r_weight, u_lin) +
                     theta * pattern.bits[i]);

    // x̂' = (A + BK)x̂ + G C A e + noise;  e' = (I − GC) A e + noise
    MatrixXd trans = MatrixXd::Zero(2 * n, 2 * n);
    trans.topLeftCorner(n, n) = a + b * k;
    trans.topRightCorner(n, n) = gain * c * a;
    trans.bottomRightCorner(n, n) = (MatrixXd::Identity(n, n) - gain * c) * a;
    mean = trans * mean;
    cov = trans * cov * trans.transpose() + noise_cov;
    disc *= alpha;
  }
  total += disc * expect_quad(terminal, sel);
  return total;
}

OracleResult oracle_select(const DiscreteModel& dm, const MatrixXd& q_weight,
                           const MatrixXd& r_weight, const MatrixXd& terminal,
                           int h, int p, double theta, double alpha,
                           const VectorXd& estimate, const MatrixXd& err_cov) {
  const std::vector<TriggerPattern> patterns = enumerate_patterns(h, p);
  OracleResult res;
  res.best_score = std::numeric_limits<double>::infinity();
  res.all_scores.reserve(patterns.size());
  for (const auto& pat : patterns) {
    const double s = oracle_pattern_cost(dm, q_weight, r_weight, terminal, pat,
                                         theta, alpha, estimate, err_cov);
    res.all_scores.push_back(s);
    if (s < res.best_score) {
      res.best_score = s;
      res.best_pattern = pat.index;
    }
  }
  return res;
}

ClosedLoopMatrices closed_loop_matrices(const RolloutTables& tables, int m) {
  if (m < 1 || m > tables.pattern_count()) {
    throw ValidationError("closed_loop_matrices: pattern index out of range");
  }
  const int h = tables.horizon;
  const auto n = tables.a.rows();
  const auto& bits = tables.pattern(m).bits;
  std::vector<MatrixXd> theta(h);
  for (int i = 0; i < h; ++i) {
    theta[i] = tables.a;
    if (bits[i]) theta[i] += tables.b * tables.gains[m - 1][i];
  }
  ClosedLoopMatrices out;
  out.gamma.resize(n, n * h);
  // Column block j carries Θ_{h-1}···Θ_{j+1}.
  MatrixXd tail = MatrixXd::Identity(n, n);
  for (int j = h - 1; j >= 0; --j) {
    out.gamma.middleCols(j * n, n) = tail;
    tail = tail * theta[j];
  }
  out.phi = tail;
  return out;
}

}  // namespace srollout
