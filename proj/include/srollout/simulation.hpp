#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srollout/controller.hpp"
#include "srollout/noise.hpp"

namespace srollout {

/// Per-step closed-loop record of one trial.
struct SimTrace {
  std::vector<VectorXd> states;     // x_k, k = 0..N-1
  std::vector<VectorXd> estimates;  // x̂_k
  std::vector<VectorXd> inputs;     // u_k
  std::vector<int> triggers;        // δ_k
  std::vector<VectorXd> outputs;    // y_k
  std::vector<double> stage_costs;  // x_kᵀQx_k + u_kᵀRu_k
  VectorXd final_state;             // x_N

  double control_cost() const;    // (1/N) Σ stage cost
  double actuation_rate() const;  // (1/N) Σ δ
  std::vector<double> squared_norms() const;
};

/// The reduced per-trial record kept by multi-trial runs.
struct TrialSummary {
  std::uint64_t trial = 0;
  double control_cost = 0.0;
  double actuation_rate = 0.0;
  std::vector<double> squared_norms;  // ‖x_k‖², k = 0..N-1
};

struct SimOptions {
  long horizon_steps = 600;
  /// Steps simulated before recording starts; the recorded trace covers
  /// k = burn_in_steps .. burn_in_steps + horizon_steps - 1.
  long burn_in_steps = 0;
  std::uint64_t seed = 0;
  /// Scales every random draw; 0 gives the noise-free nominal loop.
  double noise_scale = 1.0;
};

/// Simulates one trial in the order: observe y_k, update x̂_k, decide
/// (u_k, δ_k), evolve x_{k+1}. Noise is keyed on (seed, trial, step, stream).
/// Throws NonFinite with the offending step when the state blows up.
SimTrace simulate_trial(const DiscreteModel& dm, const SteadyKalman& kf,
                        const MatrixXd& q_weight, const MatrixXd& r_weight,
                        Controller& controller, const SimOptions& opts,
                        std::uint64_t trial);

TrialSummary summarize(const SimTrace& trace, std::uint64_t trial);

/// Runs `trials` independent trials of clones of `prototype` on up to
/// `threads` workers; the result is ordered by trial index.
std::vector<TrialSummary> run_trials(const DiscreteModel& dm,
                                     const SteadyKalman& kf,
                                     const MatrixXd& q_weight,
                                     const MatrixXd& r_weight,
                                     const Controller& prototype,
                                     const SimOptions& opts, int trials,
                                     int threads);

struct Metrics {
  double avg_control_cost = 0.0;
  double avg_actuation_rate = 0.0;
  double total = 0.0;
  double stderr_control_cost = 0.0;
  double stderr_rate = 0.0;
  double stderr_total = 0.0;
  double theta = 0.0;
  std::vector<double> per_trial_cost;
  std::vector<double> per_trial_rate;
};

Metrics estimate_metrics(const std::vector<TrialSummary>& trials, double theta);
Metrics estimate_metrics(const std::vector<SimTrace>& traces, double theta);

struct RolloutBoundCheck {
  bool holds = false;
  double margin = 0.0;  // J(per) + 1/h + 3·pooled − J(ro)
  double pooled_stderr = 0.0;
};

/// Ĵ(ro) ≤ Ĵ(per) + 1/h + 3·pooled standard error.
RolloutBoundCheck check_rollout_bound(const Metrics& rollout,
                                      const Metrics& periodic,
                                      int h);

struct StabilityReport {
  bool bounded = false;
  std::vector<double> window_means;
  double slope = 0.0;
  double slope_stderr = 0.0;
  double last_window = 0.0;
  double max_middle_window = 0.0;
};

/// Windowed E‖x_k‖² across trials: bounded iff the last window stays within
/// 1.5× the largest middle window and the fitted slope is not above zero at
/// 3σ. Requires N ≥ 4·window.
StabilityReport check_mean_square_stability(
    const std::vector<std::vector<double>>& squared_norms, int window);

}  // namespace srollout
