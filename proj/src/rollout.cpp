#include "srollout/rollout.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace srollout {

std::vector<TriggerPattern> enumerate_patterns(int h, int p) {
  if (h < 1 || p < 1) {
    throw HorizonMismatch("lookahead h and period p must be positive");
  }
  if (h > kMaxLookahead) {
    throw HorizonMismatch("lookahead h = " + std::to_string(h) +
                          " exceeds the limit of " +
                          std::to_string(kMaxLookahead));
  }
  if (h % p != 0) {
    throw HorizonMismatch("lookahead h = " + std::to_string(h) +
                          " is not a multiple of period p = " +
                          std::to_string(p) + " (h mod p must be 0)");
  }
  const auto make = [h](std::uint64_t code, int index) {
    TriggerPattern tp;
    tp.index = index;
    tp.bits.resize(h);
    for (int t = 0; t < h; ++t) {
      tp.bits[t] = static_cast<std::uint8_t>((code >> (h - 1 - t)) & 1U);
      tp.actuation_count += tp.bits[t];
    }
    return tp;
  };
  std::uint64_t periodic_code = 0;
  for (int t = 0; t < h; t += p) periodic_code |= std::uint64_t{1} << (h - 1 - t);

  std::vector<TriggerPattern> out;
  out.reserve(std::size_t{1} << h);
  out.push_back(make(periodic_code, 1));
  int index = 2;
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << h); ++code) {
    if (code == periodic_code) continue;
    out.push_back(make(code, index++));
  }
  return out;
}

RolloutTables build_tables(const DiscreteModel& dm, const MatrixXd& q_weight,
                           const MatrixXd& r_weight, const MatrixXd& terminal,
                           int h, int p, double theta, double alpha,
                           const MatrixXd& err_cov) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ValidationError("build_tables: alpha must lie in (0, 1]");
  }
  const auto n = dm.a.rows();
  if (terminal.rows() != n || terminal.cols() != n || err_cov.rows() != n ||
      err_cov.cols() != n) {
    throw ValidationError("build_tables: terminal/error covariance must be n x n");
  }
  RolloutTables t;
  t.horizon = h;
  t.period = p;
  t.theta = theta;
  t.discount = alpha;
  t.patterns = enumerate_patterns(h, p);
  t.terminal = terminal;
  t.err_cov = err_cov;
  t.a = dm.a;
  t.b = dm.b;

  const MatrixXd& a = dm.a;
  const MatrixXd& b = dm.b;
  const auto q = b.cols();
  const std::size_t count = t.patterns.size();
  t.cost_matrices.assign(count, std::vector<MatrixXd>(h + 1));
  t.gains.assign(count, std::vector<MatrixXd>(h));
  t.gain_quadratics.assign(count, std::vector<MatrixXd>(h));
  t.noise_score.assign(count, 0.0);
  t.trigger_score.assign(count, 0.0);

  for (std::size_t mi = 0; mi < count; ++mi) {
    const auto& bits = t.patterns[mi].bits;
    auto& pm = t.cost_matrices[mi];
    pm[h] = terminal;
    for (int s = h - 1; s >= 0; --s) {
      const MatrixXd& next = pm[s + 1];
      MatrixXd cur = q_weight + alpha * a.transpose() * next * a;
      if (bits[s]) {
        const MatrixXd inner = alpha * b.transpose() * next * b + r_weight;
        const MatrixXd lin = alpha * b.transpose() * next * a;
        const MatrixXd f = -inner.ldlt().solve(lin);
        cur += lin.transpose() * f;
        t.gains[mi][s] = f;
        t.gain_quadratics[mi][s] =
            linalg::symmetrize(f.transpose() * inner * f);
      } else {
        t.gains[mi][s] = MatrixXd::Zero(q, n);
        t.gain_quadratics[mi][s] = MatrixXd::Zero(n, n);
      }
      pm[s] = linalg::symmetrize(cur);
      if (!pm[s].allFinite()) {
        throw NonFinite("build_tables: recursion overflow for pattern " +
                        std::to_string(mi + 1) + " at step " +
                        std::to_string(s));
      }
    }
    // Noise injected at step τ reaches the cost-to-go one step later, hence
    // α^{τ+1}; the estimation-error loss is charged at step τ itself.
    double beta = 0.0;
    double gamma = 0.0;
    double disc = 1.0;
    for (int tau = 0; tau < h; ++tau) {
      beta += disc * alpha * (pm[tau + 1] * dm.proc_cov).trace();
      beta += disc * (t.gain_quadratics[mi][tau] * err_cov).trace();
      gamma += disc * bits[tau];
      disc *= alpha;
    }
    t.noise_score[mi] = beta;
    t.trigger_score[mi] = theta * gamma;
  }
  return t;
}

double pattern_score(const RolloutTables& tables, int m,
                     const VectorXd& estimate, const MatrixXd& err_cov) {
  if (m < 1 || m > tables.pattern_count()) {
    throw ValidationError("pattern_score: pattern index out of range");
  }
  const MatrixXd& p0 = tables.cost_matrices[m - 1][0];
  return estimate.dot(p0 * estimate) + (p0 * err_cov).trace() +
         tables.noise_score[m - 1] + tables.trigger_score[m - 1];
}

int select_pattern(const RolloutTables& tables, const VectorXd& estimate,
                   const MatrixXd& err_cov) {
  int best = 1;
  double best_score = std::numeric_limits<double>::infinity();
  for (int m = 1; m <= tables.pattern_count(); ++m) {
    const double s = pattern_score(tables, m, estimate, err_cov);
    if (s < best_score) {
      best_score = s;
      best = m;
    }
  }
  return best;
}

RolloutController::RolloutController(
    std::shared_ptr<const RolloutTables> tables, std::optional<int> forced)
    : tables_(std::move(tables)), forced_(forced) {
  if (forced_ && (*forced_ < 1 || *forced_ > tables_->pattern_count())) {
    throw ValidationError("forced pattern index out of range");
  }
}

Decision RolloutController::decide(const EstimatorState& est) {
  const int h = tables_->horizon;
  phase_ = static_cast<int>(est.step_index % h);
  if (phase_ == 0) {
    selected_ = forced_ ? *forced_
                        : select_pattern(*tables_, est.estimate, est.err_cov);
    history_.push_back(selected_);
  }
  const auto& bits = tables_->pattern(selected_).bits;
  Decision d;
  d.trigger = bits[phase_];
  if (d.trigger) {
    d.input = tables_->gains[selected_ - 1][phase_] * est.estimate;
  } else {
    d.input = VectorXd::Zero(tables_->b.cols());
  }
  return d;
}

std::unique_ptr<Controller> RolloutController::clone() const {
  return std::make_unique<RolloutController>(tables_, forced_);
}

std::vector<BlockStep> rollout_block(RolloutController& pol, EstimatorState& est,
                                     const PlantStepper& plant,
                                     const DiscreteModel& dm) {
  const int h = pol.tables().horizon;
  if (est.step_index % h != 0) {
    throw ValidationError("rollout_block: estimator is not at a block boundary");
  }
  std::vector<BlockStep> seg;
  seg.reserve(h);
  for (int s = 0; s < h; ++s) {
    Decision d = pol.decide(est);
    BlockStep step;
    step.estimate = est.estimate;
    step.input = d.input;
    step.trigger = d.trigger;
    step.pattern = pol.selected_pattern();
    const VectorXd y_next = plant(d.input);
    est = kalman_step(est, d.input, y_next, dm);
    seg.push_back(std::move(step));
  }
  return seg;
}

}  // namespace srollout
