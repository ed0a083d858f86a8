#pragma once

#include <memory>

#include "srollout/estimator.hpp"

namespace srollout {

/// Actuation decision at one step. `trigger == 0` implies `input` is exactly
/// zero.
struct Decision {
  VectorXd input;
  int trigger = 0;
};

/// A causal policy (u_k, δ_k) = μ(I_k), evaluated on the current estimate.
/// Controllers carry per-trial state, so each trial owns its own instance.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual Decision decide(const EstimatorState& est) = 0;
  /// Fresh instance with the same design and reset per-trial state.
  virtual std::unique_ptr<Controller> clone() const = 0;
};

/// u ≡ 0, δ ≡ 0.
class ZeroController final : public Controller {
 public:
  explicit ZeroController(int inputs) : inputs_(inputs) {}
  Decision decide(const EstimatorState&) override {
    return {VectorXd::Zero(inputs_), 0};
  }
  std::unique_ptr<Controller> clone() const override {
    return std::make_unique<ZeroController>(inputs_);
  }

 private:
  int inputs_;
};

}  // namespace srollout
