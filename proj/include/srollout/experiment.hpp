#pragma once

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "srollout/config.hpp"
#include "srollout/periodic.hpp"
#include "srollout/rollout.hpp"
#include "srollout/simulation.hpp"
#include "srollout/sparse_mpc.hpp"

namespace srollout {

/// Best period among the candidates (restricted to divisors of the rollout
/// horizon when the rollout's base period is chosen per θ).
BestPeriodic choose_period(const ExperimentConfig& cfg,
                           const ExperimentSetup& setup, double theta,
                           bool divisors_of_horizon);

/// Rollout tables for θ with base period p and terminal P̃_p at the
/// configured α.
std::shared_ptr<const RolloutTables> make_rollout_tables(
    const ExperimentConfig& cfg, const ExperimentSetup& setup, double theta,
    int base_period);

std::shared_ptr<const MpcProblem> make_mpc_problem(const ExperimentConfig& cfg,
                                                   const ExperimentSetup& setup,
                                                   double theta);

AdmmOptions admm_options(const ExperimentConfig& cfg);

struct PreparedController {
  std::unique_ptr<Controller> controller;
  int period = 0;  // periodic period or rollout base period; 0 for MPC
};

PreparedController make_controller(Method method, const ExperimentConfig& cfg,
                                   const ExperimentSetup& setup, double theta);

struct SweepCell {
  double theta = 0.0;
  Method method = Method::kRollout;
  bool ok = false;
  std::string status = "ok";
  int period = 0;
  Metrics metrics;
  std::vector<TrialSummary> trials;
};

/// Runs every enabled method at every θ with common random numbers (the same
/// seed base and trial indices for all methods). Failures are recorded per
/// cell and the sweep continues.
std::vector<SweepCell> theta_sweep(const ExperimentConfig& cfg,
                                   const ExperimentSetup& setup,
                                   const std::vector<double>& theta_grid);

/// Runs one (method, θ) cell.
SweepCell run_cell(Method method, const ExperimentConfig& cfg,
                   const ExperimentSetup& setup, double theta);

inline constexpr const char* kTradeoffHeader =
    "theta,method,avg_control_cost,avg_actuation_rate,total_cost,stderr_cost,"
    "stderr_rate,trials,seed_base";
inline constexpr const char* kPerTrialHeader =
    "theta,method,trial,control_cost,actuation_rate,total_cost";
inline constexpr const char* kStatusHeader = "theta,method,status,period";

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

void write_tradeoff_csv(std::ostream& os, const std::vector<SweepCell>& cells,
                        const ExperimentConfig& cfg);
void write_pertrial_csv(std::ostream& os, const std::vector<SweepCell>& cells);
void write_status_csv(std::ostream& os, const std::vector<SweepCell>& cells);

}  // namespace srollout
