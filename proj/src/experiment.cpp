#include "srollout/experiment.hpp"

#include <charconv>
#include <cmath>

namespace srollout {

BestPeriodic choose_period(const ExperimentConfig& cfg,
                           const ExperimentSetup& setup, double theta,
                           bool divisors_of_horizon) {
  std::vector<int> cands;
  for (int p : cfg.period_candidates) {
    if (!divisors_of_horizon || cfg.rollout.horizon % p == 0) cands.push_back(p);
  }
  return best_periodic(setup.model, setup.q_weight, setup.r_weight, cands,
                       setup.filter.err_cov, theta);
}

std::shared_ptr<const RolloutTables> make_rollout_tables(
    const ExperimentConfig& cfg, const ExperimentSetup& setup, double theta,
    int base_period) {
  const PeriodicDesign design =
      design_periodic(setup.model, setup.q_weight, setup.r_weight, base_period,
                      cfg.rollout.alpha);
  MatrixXd terminal = design.policy.cost_matrix;
  if (cfg.verify.corrupt_terminal) terminal *= 1.01;
  return std::make_shared<const RolloutTables>(build_tables(
      setup.model, setup.q_weight, setup.r_weight, terminal, cfg.rollout.horizon,
      base_period, theta, cfg.rollout.alpha, setup.filter.err_cov));
}

std::shared_ptr<const MpcProblem> make_mpc_problem(const ExperimentConfig& cfg,
                                                   const ExperimentSetup& setup,
                                                   double theta) {
  const PeriodicDesign lqr =
      design_periodic(setup.model, setup.q_weight, setup.r_weight, 1, 1.0);
  return std::make_shared<const MpcProblem>(build_mpc_problem(
      setup.model.a, setup.model.b, setup.q_weight, setup.r_weight,
      lqr.policy.cost_matrix, cfg.mpc.horizon, theta));
}

AdmmOptions admm_options(const ExperimentConfig& cfg) {
  AdmmOptions o;
  o.penalty = cfg.mpc.penalty;
  o.tolerance = cfg.mpc.tolerance;
  o.max_iterations = cfg.mpc.max_iterations;
  o.over_relaxation = cfg.mpc.over_relaxation;
  o.kkt_tolerance = cfg.mpc.kkt_tolerance;
  return o;
}

PreparedController make_controller(Method method, const ExperimentConfig& cfg,
                                   const ExperimentSetup& setup, double theta) {
  PreparedController out;
  switch (method) {
    case Method::kPeriodic: {
      const BestPeriodic best = choose_period(cfg, setup, theta, false);
      PeriodicDesign d = design_periodic(setup.model, setup.q_weight,
                                         setup.r_weight, best.period, 1.0);
      out.period = best.period;
      out.controller = std::make_unique<PeriodicController>(std::move(d.policy));
      break;
    }
    case Method::kRollout: {
      const int p = cfg.rollout.base_period
                        ? *cfg.rollout.base_period
                        : choose_period(cfg, setup, theta, true).period;
      out.period = p;
      out.controller = std::make_unique<RolloutController>(
          make_rollout_tables(cfg, setup, theta, p));
      break;
    }
    case Method::kSparseMpc: {
      out.controller = std::make_unique<SparseMpcController>(
          make_mpc_problem(cfg, setup, theta), admm_options(cfg),
          cfg.mpc.zero_tol);
      break;
    }
  }
  return out;
}

SweepCell run_cell(Method method, const ExperimentConfig& cfg,
                   const ExperimentSetup& setup, double theta) {
  SweepCell cell;
  cell.theta = theta;
  cell.method = method;
  try {
    PreparedController pc = make_controller(method, cfg, setup, theta);
    cell.period = pc.period;
    SimOptions opts;
    opts.horizon_steps = cfg.horizon_steps;
    opts.seed = cfg.seed_base;
    cell.trials = run_trials(setup.model, setup.filter, setup.q_weight,
                             setup.r_weight, *pc.controller, opts, cfg.trials,
                             cfg.threads);
    cell.metrics = estimate_metrics(cell.trials, theta);
    cell.ok = true;
  } catch (const Error& e) {
    cell.ok = false;
    cell.status = e.what();
  }
  return cell;
}

std::vector<SweepCell> theta_sweep(const ExperimentConfig& cfg,
                                   const ExperimentSetup& setup,
                                   const std::vector<double>& theta_grid) {
  if (theta_grid.empty()) throw ValidationError("theta_sweep: empty grid");
  std::vector<SweepCell> cells;
  for (double theta : theta_grid) {
    for (Method m : cfg.methods) cells.push_back(run_cell(m, cfg, setup, theta));
  }
  return cells;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

void write_tradeoff_csv(std::ostream& os, const std::vector<SweepCell>& cells,
                        const ExperimentConfig& cfg) {
  os << kTradeoffHeader << '\n';
  for (const auto& c : cells) {
    os << format_double(c.theta) << ',' << to_string(c.method) << ',';
    if (c.ok) {
      const Metrics& m = c.metrics;
      os << format_double(m.avg_control_cost) << ','
         << format_double(m.avg_actuation_rate) << ',' << format_double(m.total)
         << ',' << format_double(m.stderr_control_cost) << ','
         << format_double(m.stderr_rate) << ',';
    } else {
      os << "nan,nan,nan,nan,nan,";
    }
    os << cfg.trials << ',' << cfg.seed_base << '\n';
  }
}

void write_pertrial_csv(std::ostream& os, const std::vector<SweepCell>& cells) {
  os << kPerTrialHeader << '\n';
  for (const auto& c : cells) {
    if (!c.ok) continue;
    for (const auto& t : c.trials) {
      os << format_double(c.theta) << ',' << to_string(c.method) << ','
         << t.trial << ',' << format_double(t.control_cost) << ','
         << format_double(t.actuation_rate) << ','
         << format_double(t.control_cost + c.theta * t.actuation_rate) << '\n';
    }
  }
}

void write_status_csv(std::ostream& os, const std::vector<SweepCell>& cells) {
  os << kStatusHeader << '\n';
  for (const auto& c : cells) {
    os << format_double(c.theta) << ',' << to_string(c.method) << ','
       << csv_escape(c.ok ? "ok" : c.status) << ',' << c.period << '\n';
  }
}

}  // namespace srollout
