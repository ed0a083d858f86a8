#include "srollout/simulation.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

namespace srollout {

double SimTrace::control_cost() const {
  if (stage_costs.empty()) return 0.0;
  return std::accumulate(stage_costs.begin(), stage_costs.end(), 0.0) /
         static_cast<double>(stage_costs.size());
}

double SimTrace::actuation_rate() const {
  if (triggers.empty()) return 0.0;
  return static_cast<double>(
             std::accumulate(triggers.begin(), triggers.end(), 0L)) /
         static_cast<double>(triggers.size());
}

std::vector<double> SimTrace::squared_norms() const {
  std::vector<double> out;
  out.reserve(states.size());
  for (const auto& x : states) out.push_back(x.squaredNorm());
  return out;
}

SimTrace simulate_trial(const DiscreteModel& dm, const SteadyKalman& kf,
                        const MatrixXd& q_weight, const MatrixXd& r_weight,
                        Controller& controller, const SimOptions& opts,
                        std::uint64_t trial) {
  if (opts.horizon_steps < 1 || opts.burn_in_steps < 0) {
    throw ValidationError("simulate_trial: horizon must be >= 1");
  }
  const CounterNormal rng(opts.seed);
  const MatrixXd init_factor = covariance_factor(dm.init_cov);
  const MatrixXd proc_factor = covariance_factor(dm.proc_cov);
  const MatrixXd meas_factor = covariance_factor(dm.meas_cov);
  const int n = dm.states();
  const int m = dm.outputs();
  const double scale = opts.noise_scale;

  SimTrace tr;
  const auto steps = static_cast<std::size_t>(opts.horizon_steps);
  tr.states.reserve(steps);
  tr.estimates.reserve(steps);
  tr.inputs.reserve(steps);
  tr.triggers.reserve(steps);
  tr.outputs.reserve(steps);
  tr.stage_costs.reserve(steps);

  VectorXd x = dm.init_mean +
               scale * init_factor *
                   rng.standard(trial, 0, NoiseStream::kInitialState, n);
  VectorXd y = dm.c * x + scale * meas_factor *
                              rng.standard(trial, 0, NoiseStream::kMeasurement, m);
  EstimatorState est = kalman_init(dm, y, kf);

  const long total = opts.burn_in_steps + opts.horizon_steps;
  for (long k = 0; k < total; ++k) {
    const Decision d = controller.decide(est);
    if (k >= opts.burn_in_steps) {
      tr.states.push_back(x);
      tr.estimates.push_back(est.estimate);
      tr.inputs.push_back(d.input);
      tr.triggers.push_back(d.trigger);
      tr.outputs.push_back(y);
      tr.stage_costs.push_back(x.dot(q_weight * x) +
                               d.input.dot(r_weight * d.input));
    }

    const auto next = static_cast<std::uint64_t>(k + 1);
    x = dm.a * x + dm.b * d.input +
        scale * proc_factor *
            rng.standard(trial, static_cast<std::uint64_t>(k),
                         NoiseStream::kProcess, n);
    if (!x.allFinite()) {
      throw NonFinite("simulate_trial: state became non-finite at step " +
                      std::to_string(k + 1) + " of trial " +
                      std::to_string(trial));
    }
    y = dm.c * x +
        scale * meas_factor * rng.standard(trial, next, NoiseStream::kMeasurement, m);
    est = kalman_step(est, d.input, y, dm);
  }
  tr.final_state = x;
  return tr;
}

TrialSummary summarize(const SimTrace& trace, std::uint64_t trial) {
  TrialSummary s;
  s.trial = trial;
  s.control_cost = trace.control_cost();
  s.actuation_rate = trace.actuation_rate();
  s.squared_norms = trace.squared_norms();
  return s;
}

std::vector<TrialSummary> run_trials(const DiscreteModel& dm,
                                     const SteadyKalman& kf,
                                     const MatrixXd& q_weight,
                                     const MatrixXd& r_weight,
                                     const Controller& prototype,
                                     const SimOptions& opts, int trials,
                                     int threads) {
  if (trials < 1) throw ValidationError("run_trials: trials must be >= 1");
  std::vector<TrialSummary> out(static_cast<std::size_t>(trials));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= trials) return;
      try {
        auto ctrl = prototype.clone();
        const SimTrace tr = simulate_trial(dm, kf, q_weight, r_weight, *ctrl,
                                           opts, static_cast<std::uint64_t>(t));
        out[static_cast<std::size_t>(t)] =
            summarize(tr, static_cast<std::uint64_t>(t));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(trials);
        return;
      }
    }
  };

  const int workers = std::max(1, std::min(threads, trials));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

namespace {

struct MeanErr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

MeanErr mean_stderr(const std::vector<double>& v) {
  MeanErr r;
  if (v.empty()) return r;
  const double n = static_cast<double>(v.size());
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  }
  return r;
}

Metrics build_metrics(std::vector<double> cost, std::vector<double> rate,
                      double theta) {
  if (cost.empty()) throw ValidationError("estimate_metrics: no trials");
  std::vector<double> total(cost.size());
  for (std::size_t i = 0; i < cost.size(); ++i) {
    total[i] = cost[i] + theta * rate[i];
  }
  const MeanErr c = mean_stderr(cost);
  const MeanErr r = mean_stderr(rate);
  const MeanErr t = mean_stderr(total);
  Metrics m;
  m.theta = theta;
  m.avg_control_cost = c.mean;
  m.avg_actuation_rate = r.mean;
  m.total = m.avg_control_cost + theta * m.avg_actuation_rate;
  m.stderr_control_cost = c.stderr_;
  m.stderr_rate = r.stderr_;
  m.stderr_total = t.stderr_;
  m.per_trial_cost = std::move(cost);
  m.per_trial_rate = std::move(rate);
  return m;
}

}  // namespace

Metrics estimate_metrics(const std::vector<TrialSummary>& trials,
                         double theta) {
  std::vector<double> cost;
  std::vector<double> rate;
  for (const auto& t : trials) {
    cost.push_back(t.control_cost);
    rate.push_back(t.actuation_rate);
  }
  return build_metrics(std::move(cost), std::move(rate), theta);
}

Metrics estimate_metrics(const std::vector<SimTrace>& traces, double theta) {
  std::vector<double> cost;
  std::vector<double> rate;
  for (const auto& t : traces) {
    cost.push_back(t.control_cost());
    rate.push_back(t.actuation_rate());
  }
  return build_metrics(std::move(cost), std::move(rate), theta);
}

RolloutBoundCheck check_rollout_bound(const Metrics& rollout,
                                      const Metrics& periodic,
                                      int h) {
  if (h < 1) throw ValidationError("check_rollout_bound: h must be >= 1");
  RolloutBoundCheck c;
  c.pooled_stderr = std::hypot(rollout.stderr_total, periodic.stderr_total);
  c.margin = periodic.total + 1.0 / h + 3.0 * c.pooled_stderr - rollout.total;
  c.holds = c.margin >= 0.0;
  return c;
}

StabilityReport check_mean_square_stability(
    const std::vector<std::vector<double>>& squared_norms, int window) {
  if (squared_norms.empty() || window < 1) {
    throw ValidationError("stability check: need trials and a positive window");
  }
  const std::size_t steps = squared_norms.front().size();
  for (const auto& tr : squared_norms) {
    if (tr.size() != steps) {
      throw ValidationError("stability check: trials differ in length");
    }
  }
  if (steps < 4 * static_cast<std::size_t>(window)) {
    throw ValidationError("stability check: horizon must be >= 4 windows");
  }
  std::vector<double> mean_sq(steps, 0.0);
  for (const auto& tr : squared_norms) {
    for (std::size_t k = 0; k < steps; ++k) mean_sq[k] += tr[k];
  }
  for (double& v : mean_sq) v /= static_cast<double>(squared_norms.size());

  StabilityReport rep;
  const std::size_t windows = steps / static_cast<std::size_t>(window);
  for (std::size_t w = 0; w < windows; ++w) {
    double s = 0.0;
    for (std::size_t k = w * window; k < (w + 1) * window; ++k) s += mean_sq[k];
    rep.window_means.push_back(s / window);
  }
  rep.last_window = rep.window_means.back();
  rep.max_middle_window = 0.0;
  for (std::size_t w = 1; w + 1 < windows; ++w) {
    rep.max_middle_window = std::max(rep.max_middle_window, rep.window_means[w]);
  }

  // Ordinary least squares of window mean against window index.
  const double wn = static_cast<double>(windows);
  const double xbar = (wn - 1.0) / 2.0;
  const double ybar =
      std::accumulate(rep.window_means.begin(), rep.window_means.end(), 0.0) / wn;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t w = 0; w < windows; ++w) {
    const double dx = static_cast<double>(w) - xbar;
    sxx += dx * dx;
    sxy += dx * (rep.window_means[w] - ybar);
  }
  rep.slope = sxy / sxx;
  double ssr = 0.0;
  for (std::size_t w = 0; w < windows; ++w) {
    const double fit = ybar + rep.slope * (static_cast<double>(w) - xbar);
    ssr += (rep.window_means[w] - fit) * (rep.window_means[w] - fit);
  }
  rep.slope_stderr = windows > 2 ? std::sqrt(ssr / (wn - 2.0) / sxx) : 0.0;

  const bool no_trend = rep.slope <= 3.0 * rep.slope_stderr;
  const bool no_growth = rep.last_window <= 1.5 * rep.max_middle_window;
  rep.bounded = no_trend && no_growth;
  return rep;
}

}  // namespace srollout
