#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "srollout/controller.hpp"
#include "srollout/periodic.hpp"

namespace srollout {

inline constexpr int kMaxLookahead = 20;

/// One actuation schedule over the lookahead block. Index 1 is the periodic
/// schedule; the rest follow in lexicographic order of `bits` (time 0 first).
struct TriggerPattern {
  int index = 1;
  std::vector<std::uint8_t> bits;
  int actuation_count = 0;
};

/// Throws HorizonMismatch unless h ≥ 1, h ≤ kMaxLookahead and h mod p = 0.
std::vector<TriggerPattern> enumerate_patterns(int h, int p);

/// Per-pattern backward recursions for the h-step lookahead, terminal cost
/// P̃_p. Pattern-indexed members are stored at position m − 1.
struct RolloutTables {
  int horizon = 1;
  int period = 1;
  double theta = 0.0;
  double discount = 1.0;
  std::vector<TriggerPattern> patterns;
  std::vector<std::vector<MatrixXd>> cost_matrices;    // [m][s], s = 0..h
  std::vector<std::vector<MatrixXd>> gains;            // [m][s], s = 0..h-1
  std::vector<std::vector<MatrixXd>> gain_quadratics;  // [m][s], s = 0..h-1
  std::vector<double> noise_score;                     // β⁽ᵐ⁾
  std::vector<double> trigger_score;                   // γ⁽ᵐ⁾
  MatrixXd terminal;
  MatrixXd err_cov;  // Σ used for β

  // Plant data kept for closed-loop diagnostics.
  MatrixXd a;
  MatrixXd b;

  int pattern_count() const { return static_cast<int>(patterns.size()); }
  const TriggerPattern& pattern(int m) const { return patterns.at(m - 1); }
};

/// Builds all 2^h recursions. Actuated steps use the Riccati update, idle
/// steps the open-loop update Q + αAᵀPA with zero gain. Throws NonFinite if
/// a recursion overflows.
RolloutTables build_tables(const DiscreteModel& dm, const MatrixXd& q_weight,
                           const MatrixXd& r_weight, const MatrixXd& terminal,
                           int h, int p, double theta, double alpha,
                           const MatrixXd& err_cov);

/// x̂ᵀP⁽ᵐ⁾₀x̂ + tr(P⁽ᵐ⁾₀Σ) + β⁽ᵐ⁾ + γ⁽ᵐ⁾.
double pattern_score(const RolloutTables& tables, int m,
                     const VectorXd& estimate, const MatrixXd& err_cov);

/// Argmin of the score over all patterns; smallest index on ties.
int select_pattern(const RolloutTables& tables, const VectorXd& estimate,
                   const MatrixXd& err_cov);

/// Receding-horizon rollout: a pattern is chosen at every block start and its
/// gains are applied over the next h steps.
class RolloutController final : public Controller {
 public:
  explicit RolloutController(std::shared_ptr<const RolloutTables> tables,
                             std::optional<int> forced_pattern = std::nullopt);

  Decision decide(const EstimatorState& est) override;
  std::unique_ptr<Controller> clone() const override;

  int selected_pattern() const { return selected_; }
  int block_phase() const { return phase_; }
  const std::vector<int>& selection_history() const { return history_; }
  const RolloutTables& tables() const { return *tables_; }

 private:
  std::shared_ptr<const RolloutTables> tables_;
  std::optional<int> forced_;
  int selected_ = 1;
  int phase_ = 0;
  std::vector<int> history_;
};

struct BlockStep {
  VectorXd estimate;
  VectorXd input;
  int trigger = 0;
  int pattern = 1;
};

/// Applies u to the plant for one step and returns y_{k+1}.
using PlantStepper = std::function<VectorXd(const VectorXd& u)>;

/// Runs one lookahead block: selects at the block start, then steps the plant
/// and the estimator h times. `est` must sit on a block boundary.
std::vector<BlockStep> rollout_block(RolloutController& pol, EstimatorState& est,
                                     const PlantStepper& plant,
                                     const DiscreteModel& dm);

}  // namespace srollout
