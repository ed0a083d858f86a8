#include "srollout/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "srollout/riccati.hpp"
#include "srollout/rollout.hpp"

namespace srollout {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(Method m) {
  switch (m) {
    case Method::kRollout: return "rollout";
    case Method::kPeriodic: return "periodic";
    case Method::kSparseMpc: return "sparse_mpc";
  }
  return "unknown";
}

Method method_from_string(const std::string& s) {
  if (s == "rollout") return Method::kRollout;
  if (s == "periodic") return Method::kPeriodic;
  if (s == "sparse_mpc") return Method::kSparseMpc;
  throw ValidationError("unknown method '" + s + "'");
}

namespace {

ordered_json matrix_to_json(const MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j, const std::string& name) {
  if (j.is_number()) return MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array()) throw ValidationError(name + ": expected a matrix");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return MatrixXd(0, 0);
  if (!j[0].is_array()) {
    throw ValidationError(name + ": expected an array of rows");
  }
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ValidationError(name + ": ragged matrix rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

VectorXd vector_from_json(const json& j, const std::string& name) {
  if (!j.is_array()) throw ValidationError(name + ": expected a vector");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

ordered_json vector_to_json(const VectorXd& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_discrete_matrices(const json& m, ExperimentConfig::Model& model) {
  model.a = matrix_from_json(m.at("a"), "model.a");
  model.b = matrix_from_json(m.at("b"), "model.b");
  model.c = matrix_from_json(m.at("c"), "model.c");
  model.proc_cov = matrix_from_json(m.at("proc_cov"), "model.proc_cov");
  model.meas_cov = matrix_from_json(m.at("meas_cov"), "model.meas_cov");
  model.init_mean = vector_from_json(m.at("init_mean"), "model.init_mean");
  if (m.contains("init_cov") && !m.at("init_cov").is_string()) {
    model.init_cov = matrix_from_json(m.at("init_cov"), "model.init_cov");
  }
}

}  // namespace

ordered_json ExperimentConfig::to_json() const {
  ordered_json j;
  ordered_json m;
  m["source"] = model.source;
  if (model.source == "benchmark") {
    m["sample_period"] = model.sample_period;
  } else if (!model.matrices_file.empty()) {
    m["file"] = model.matrices_file;
  } else {
    m["a"] = matrix_to_json(model.a);
    m["b"] = matrix_to_json(model.b);
    m["c"] = matrix_to_json(model.c);
    m["proc_cov"] = matrix_to_json(model.proc_cov);
    m["meas_cov"] = matrix_to_json(model.meas_cov);
    m["init_mean"] = vector_to_json(model.init_mean);
    if (model.init_cov.size() == 0) {
      m["init_cov"] = "stationary";
    } else {
      m["init_cov"] = matrix_to_json(model.init_cov);
    }
  }
  j["model"] = m;
  j["cost"] = {{"q", matrix_to_json(q_weight)}, {"r", matrix_to_json(r_weight)}};
  j["theta_grid"] = theta_grid;
  ordered_json meths = ordered_json::array();
  for (Method me : methods) meths.push_back(to_string(me));
  j["methods"] = meths;
  ordered_json ro;
  ro["horizon"] = rollout.horizon;
  if (rollout.base_period) {
    ro["base_period"] = *rollout.base_period;
  } else {
    ro["base_period"] = "best";
  }
  ro["alpha"] = rollout.alpha;
  j["rollout"] = ro;
  j["periodic"] = {{"candidates", period_candidates}};
  ordered_json mp;
  mp["horizon"] = mpc.horizon;
  mp["penalty"] = mpc.penalty;
  mp["tolerance"] = mpc.tolerance;
  mp["max_iterations"] = mpc.max_iterations;
  mp["over_relaxation"] = mpc.over_relaxation;
  mp["zero_tol"] = mpc.zero_tol;
  mp["kkt_tolerance"] = mpc.kkt_tolerance;
  j["sparse_mpc"] = mp;
  ordered_json sim;
  sim["trials"] = trials;
  sim["horizon_steps"] = horizon_steps;
  sim["seed_base"] = seed_base;
  sim["threads"] = threads;
  j["simulation"] = sim;
  j["output"] = {{"dir", output_dir}};
  ordered_json ver;
  ver["corrupt_terminal"] = verify.corrupt_terminal;
  ver["oracle_samples"] = verify.oracle_samples;
  ver["stability_window"] = verify.stability_window;
  ver["burn_in_steps"] = verify.burn_in_steps;
  j["verify"] = ver;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j,
                                             const std::string& base_dir) {
  ExperimentConfig cfg;
  try {
    if (j.contains("model")) {
      const json& m = j.at("model");
      read_opt(m, "source", cfg.model.source);
      if (cfg.model.source == "benchmark") {
        read_opt(m, "sample_period", cfg.model.sample_period);
      } else if (cfg.model.source == "matrices") {
        if (m.contains("file")) {
          cfg.model.matrices_file = m.at("file").get<std::string>();
          std::filesystem::path path(cfg.model.matrices_file);
          if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
          std::ifstream in(path);
          if (!in) {
            throw ValidationError("cannot open model file " + path.string());
          }
          read_discrete_matrices(json::parse(in), cfg.model);
        } else {
          read_discrete_matrices(m, cfg.model);
        }
      } else {
        throw ValidationError("model.source must be 'benchmark' or 'matrices'");
      }
    }
    if (j.contains("cost")) {
      const json& c = j.at("cost");
      if (c.contains("q")) cfg.q_weight = matrix_from_json(c.at("q"), "cost.q");
      if (c.contains("r")) cfg.r_weight = matrix_from_json(c.at("r"), "cost.r");
    }
    if (cfg.model.source == "benchmark") {
      if (cfg.q_weight.size() == 0) cfg.q_weight = benchmark_state_weight();
      if (cfg.r_weight.size() == 0) cfg.r_weight = benchmark_input_weight();
    }
    read_opt(j, "theta_grid", cfg.theta_grid);
    if (j.contains("methods")) {
      cfg.methods.clear();
      for (const auto& s : j.at("methods")) {
        cfg.methods.push_back(method_from_string(s.get<std::string>()));
      }
    }
    if (j.contains("rollout")) {
      const json& r = j.at("rollout");
      read_opt(r, "horizon", cfg.rollout.horizon);
      if (r.contains("base_period")) {
        const json& bp = r.at("base_period");
        if (bp.is_string()) {
          if (bp.get<std::string>() != "best") {
            throw ValidationError("rollout.base_period must be an integer or 'best'");
          }
          cfg.rollout.base_period.reset();
        } else {
          cfg.rollout.base_period = bp.get<int>();
        }
      }
      read_opt(r, "alpha", cfg.rollout.alpha);
    }
    if (j.contains("periodic")) {
      read_opt(j.at("periodic"), "candidates", cfg.period_candidates);
    }
    if (j.contains("sparse_mpc")) {
      const json& s = j.at("sparse_mpc");
      read_opt(s, "horizon", cfg.mpc.horizon);
      read_opt(s, "penalty", cfg.mpc.penalty);
      read_opt(s, "tolerance", cfg.mpc.tolerance);
      read_opt(s, "max_iterations", cfg.mpc.max_iterations);
      read_opt(s, "over_relaxation", cfg.mpc.over_relaxation);
      read_opt(s, "zero_tol", cfg.mpc.zero_tol);
      read_opt(s, "kkt_tolerance", cfg.mpc.kkt_tolerance);
    }
    if (j.contains("simulation")) {
      const json& s = j.at("simulation");
      read_opt(s, "trials", cfg.trials);
      read_opt(s, "horizon_steps", cfg.horizon_steps);
      read_opt(s, "seed_base", cfg.seed_base);
      read_opt(s, "threads", cfg.threads);
    }
    if (j.contains("output")) read_opt(j.at("output"), "dir", cfg.output_dir);
    if (j.contains("verify")) {
      const json& v = j.at("verify");
      read_opt(v, "corrupt_terminal", cfg.verify.corrupt_terminal);
      read_opt(v, "oracle_samples", cfg.verify.oracle_samples);
      read_opt(v, "stability_window", cfg.verify.stability_window);
      read_opt(v, "burn_in_steps", cfg.verify.burn_in_steps);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  const std::string base =
      std::filesystem::path(path).parent_path().string();
  ExperimentConfig cfg = ExperimentConfig::from_json(j, base.empty() ? "." : base);
  validate_config(cfg);
  return cfg;
}

ExperimentConfig benchmark_config() {
  ExperimentConfig cfg;
  cfg.q_weight = benchmark_state_weight();
  cfg.r_weight = benchmark_input_weight();
  for (int i = 1; i <= 20; ++i) cfg.theta_grid.push_back(0.02 * i);
  return cfg;
}

namespace {

DiscreteModel raw_model(const ExperimentConfig& cfg) {
  if (cfg.model.source == "benchmark") {
    if (!(cfg.model.sample_period > 0.0)) {
      throw ValidationError("model.sample_period must be positive");
    }
    DiscreteModel dm =
        discretize(build_benchmark_model(), cfg.model.sample_period);
    dm.init_mean = benchmark_initial_mean();
    return dm;
  }
  DiscreteModel dm;
  dm.a = cfg.model.a;
  dm.b = cfg.model.b;
  dm.c = cfg.model.c;
  dm.proc_cov = cfg.model.proc_cov;
  dm.meas_cov = cfg.model.meas_cov;
  dm.init_mean = cfg.model.init_mean;
  dm.init_cov = cfg.model.init_cov.size() == 0
                    ? MatrixXd::Zero(dm.a.rows(), dm.a.rows())
                    : cfg.model.init_cov;
  return dm;
}

}  // namespace

void validate_config(const ExperimentConfig& cfg) {
  (void)build_setup(cfg);
}

ExperimentSetup build_setup(const ExperimentConfig& cfg) {
  if (cfg.theta_grid.empty()) throw ValidationError("theta_grid is empty");
  for (double t : cfg.theta_grid) {
    if (!(t > 0.0)) throw ValidationError("theta values must be > 0");
  }
  if (cfg.methods.empty()) throw ValidationError("no methods enabled");
  if (cfg.trials < 1) throw ValidationError("simulation.trials must be >= 1");
  if (cfg.horizon_steps < 1) {
    throw ValidationError("simulation.horizon_steps must be >= 1");
  }
  if (cfg.threads < 1) throw ValidationError("simulation.threads must be >= 1");
  if (!(cfg.rollout.alpha > 0.0 && cfg.rollout.alpha <= 1.0)) {
    throw ValidationError("rollout.alpha must lie in (0, 1]");
  }
  if (cfg.period_candidates.empty()) {
    throw ValidationError("periodic.candidates is empty");
  }
  if (cfg.mpc.horizon < 1) throw ValidationError("sparse_mpc.horizon must be >= 1");
  if (cfg.verify.oracle_samples < 0 || cfg.verify.stability_window < 1 ||
      cfg.verify.burn_in_steps < 0) {
    throw ValidationError("verify: oracle_samples >= 0, stability_window >= 1, "
                          "burn_in_steps >= 0 required");
  }

  ExperimentSetup s;
  s.model = raw_model(cfg);
  s.q_weight = cfg.q_weight;
  s.r_weight = cfg.r_weight;
  const auto n = s.model.a.rows();
  const auto q = s.model.b.cols();
  if (s.q_weight.rows() != n || s.q_weight.cols() != n ||
      s.r_weight.rows() != q || s.r_weight.cols() != q) {
    throw ValidationError("cost weights do not match the model dimensions");
  }
  if (!linalg::is_psd(s.q_weight)) {
    throw ValidationError("Q must be symmetric positive semidefinite");
  }
  if (!linalg::is_pd(s.r_weight)) {
    throw ValidationError("R must be symmetric positive definite (R PD violated)");
  }
  s.model.validate();

  const bool uses_rollout =
      std::find(cfg.methods.begin(), cfg.methods.end(), Method::kRollout) !=
      cfg.methods.end();
  for (int p : cfg.period_candidates) {
    if (p < 1) throw ValidationError("period candidates must be >= 1");
    if (!check_pathological_sampling(s.model.a, p)) {
      throw AssumptionViolated("period " + std::to_string(p) +
                               " violates the pathological-sampling condition");
    }
  }
  if (uses_rollout && !cfg.rollout.base_period) {
    // The base period is chosen per θ among the candidates dividing h.
    (void)enumerate_patterns(cfg.rollout.horizon, 1);
    const bool any = std::any_of(
        cfg.period_candidates.begin(), cfg.period_candidates.end(),
        [&](int p) { return cfg.rollout.horizon % p == 0; });
    if (!any) {
      throw HorizonMismatch("no periodic candidate divides the rollout horizon "
                            "(h mod p must be 0)");
    }
  }
  if (uses_rollout && cfg.rollout.base_period) {
    const int p = *cfg.rollout.base_period;
    (void)enumerate_patterns(cfg.rollout.horizon, p);
    if (!check_pathological_sampling(s.model.a, p)) {
      throw AssumptionViolated("rollout base period violates the "
                               "pathological-sampling condition");
    }
  }
  if (!check_observability(s.model.a, linalg::psd_sqrt(s.q_weight))) {
    throw AssumptionViolated("(A, Q^1/2) must be observable");
  }
  if (!check_controllability(s.model.a, s.model.b)) {
    throw AssumptionViolated("(A, B) must be controllable");
  }
  if (!check_observability(s.model.a, s.model.c)) {
    throw AssumptionViolated("(A, C) must be observable");
  }

  s.filter = steady_kalman(s.model);
  if (cfg.model.init_cov.size() == 0) {
    s.model = with_stationary_initial_covariance(s.model, s.filter);
  }
  return s;
}

}  // namespace srollout
