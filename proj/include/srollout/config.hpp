#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "srollout/estimator.hpp"

namespace srollout {

enum class Method { kRollout, kPeriodic, kSparseMpc };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

/// Every knob of one experiment. Loaded from a JSON file; `to_json` emits the
/// canonical form (all fields, fixed key order).
struct ExperimentConfig {
  struct Model {
    std::string source = "benchmark";  // benchmark | matrices
    double sample_period = 0.1;
    // Only for source == "matrices": discrete-time plant.
    MatrixXd a, b, c, proc_cov, meas_cov;
    VectorXd init_mean;
    /// Empty means "use the stationary filter covariance".
    MatrixXd init_cov;
    std::string matrices_file;  // optional external file with the matrices
  } model;

  MatrixXd q_weight;  // defaults to the benchmark weights when empty
  MatrixXd r_weight;

  std::vector<double> theta_grid;
  std::vector<Method> methods{Method::kRollout, Method::kPeriodic,
                              Method::kSparseMpc};

  struct Rollout {
    int horizon = 6;
    std::optional<int> base_period;  // empty: best periodic per θ
    double alpha = 1.0;
  } rollout;

  std::vector<int> period_candidates{1, 2, 3, 6};

  struct Mpc {
    int horizon = 30;
    double penalty = 1.0;
    double tolerance = 1e-8;
    int max_iterations = 10000;
    double over_relaxation = 1.6;
    double zero_tol = 1e-9;
    double kkt_tolerance = 1e-6;
  } mpc;

  int trials = 50;
  long horizon_steps = 600;
  std::uint64_t seed_base = 20240601;
  int threads = 1;
  std::string output_dir = "out";

  struct Verify {
    bool corrupt_terminal = false;  // negative-control hook
    int oracle_samples = 100;
    int stability_window = 60;
    /// Warm-up discarded before comparing against stationary formulas.
    long burn_in_steps = 600;
  } verify;

  nlohmann::ordered_json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j,
                                    const std::string& base_dir = ".");
};

/// Reads and validates a config file. Throws ValidationError.
ExperimentConfig load_config(const std::string& path);

/// Benchmark experiment defaults (θ ∈ {0.02, …, 0.40}).
ExperimentConfig benchmark_config();

/// The discretized plant with its initial covariance set, plus weights and
/// the stationary filter.
struct ExperimentSetup {
  DiscreteModel model;
  MatrixXd q_weight;
  MatrixXd r_weight;
  SteadyKalman filter;
};

/// Throws ValidationError naming the failed invariant (dimensions, PD/PSD,
/// h mod p, pathological sampling, θ > 0, …).
ExperimentSetup build_setup(const ExperimentConfig& cfg);

void validate_config(const ExperimentConfig& cfg);

}  // namespace srollout
