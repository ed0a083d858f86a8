#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "srollout/config.hpp"
#include "srollout/rollout.hpp"

namespace srollout {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNumeric = 3,
  kExitSweepFailed = 4,
  kExitVerifyFailed = 5,
};

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "SROLLOUT_OUT_DIR";

/// FNV-1a digest of every table entry, as 16 hex digits.
std::string table_digest(const RolloutTables& tables);

/// ‖P₀⁽¹⁾ − terminal‖_F / ‖terminal‖_F.
double base_pattern_residual(const RolloutTables& tables);

nlohmann::ordered_json design_report(const ExperimentConfig& cfg,
                                     const ExperimentSetup& setup);

/// Writes design.json; prints a short summary to `log`.
int cmd_design(const ExperimentConfig& cfg, const std::filesystem::path& out,
               std::ostream& log);

/// Writes tradeoff.csv, pertrial.csv and status.csv.
int cmd_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out,
              std::ostream& log);

struct VerifyCheck {
  std::string name;
  bool passed = false;
  nlohmann::ordered_json detail;
};

std::vector<VerifyCheck> run_verification(const ExperimentConfig& cfg,
                                          const ExperimentSetup& setup,
                                          std::ostream& log);

/// Writes verify.json; exit 5 if any check fails.
int cmd_verify(const ExperimentConfig& cfg, const std::filesystem::path& out,
               std::ostream& log);

/// Reads a tradeoff.csv and writes fig_tradeoff.csv and fig_theta.csv.
/// Throws ValidationError on malformed or empty input.
int cmd_plotdata(const std::filesystem::path& sweep_csv,
                 const std::filesystem::path& out, std::ostream& log);

inline constexpr const char* kFigTradeoffHeader =
    "method,theta,avg_actuation_rate,avg_control_cost";
inline constexpr const char* kFigThetaHeader =
    "theta,method,avg_control_cost,cost_err,avg_actuation_rate,rate_err,"
    "total_cost,cost_std,rate_std";

}  // namespace srollout
