#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "srollout/estimator.hpp"
#include "srollout/periodic.hpp"
#include "srollout/rollout.hpp"
#include "srollout/simulation.hpp"

using namespace srollout;

namespace {

struct Bench {
  DiscreteModel dm;
  MatrixXd q = benchmark_state_weight();
  MatrixXd r = benchmark_input_weight();
  SteadyKalman kf;
  Bench() {
    dm = discretize(build_benchmark_model(), kBenchmarkSamplePeriod);
    dm.init_mean = benchmark_initial_mean();
    dm.init_cov = MatrixXd::Identity(4, 4);
    kf = steady_kalman(dm);
    dm = with_stationary_initial_covariance(dm, kf);
  }
  PeriodicDesign periodic(int p) const { return design_periodic(dm, q, r, p, 1.0); }
  std::shared_ptr<const RolloutTables> tables(int h, int p, double theta) const {
    return std::make_shared<const RolloutTables>(
        build_tables(dm, q, r, periodic(p).policy.cost_matrix, h, p, theta, 1.0, kf.err_cov));
  }
};

DiscreteModel scalar_model(double a) {
  DiscreteModel dm;
  dm.a = MatrixXd::Constant(1, 1, a);
  dm.b = dm.c = dm.proc_cov = dm.meas_cov = MatrixXd::Ones(1, 1);
  dm.init_mean = VectorXd::Ones(1);
  dm.init_cov = MatrixXd::Ones(1, 1);
  return dm;
}

SimOptions options(long steps, std::uint64_t seed) {
  SimOptions o;
  o.horizon_steps = steps;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("noise-free loop follows the deterministic LQ recursion") {
  Bench b;
  const PeriodicDesign d = b.periodic(1);
  PeriodicController ctrl(d.policy);
  SimOptions o = options(200, 1);
  o.noise_scale = 0.0;
  const SimTrace tr = simulate_trial(b.dm, b.kf, b.q, b.r, ctrl, o, 0);
  const MatrixXd closed = b.dm.a + b.dm.b * d.policy.feedback_gain;
  VectorXd x = b.dm.init_mean;
  double cost = 0.0;
  for (int k = 0; k < 200; ++k) {
    CHECK((tr.states[k] - x).norm() <= 1e-12 * std::max(1.0, x.norm()));
    CHECK((tr.estimates[k] - x).norm() <= 1e-12 * std::max(1.0, x.norm()));
    const VectorXd u = d.policy.feedback_gain * x;
    cost += x.dot(b.q * x) + u.dot(b.r * u);
    x = closed * x;
  }
  CHECK(tr.control_cost() == doctest::Approx(cost / 200).epsilon(1e-10));
  CHECK(tr.actuation_rate() == 1.0);
}

TEST_CASE("single step cost of the unactuated nominal loop") {
  Bench b;
  ZeroController ctrl(1);
  SimOptions o = options(1, 3);
  o.noise_scale = 0.0;
  const SimTrace tr = simulate_trial(b.dm, b.kf, b.q, b.r, ctrl, o, 0);
  const VectorXd& x0 = b.dm.init_mean;
  CHECK(tr.control_cost() == doctest::Approx(x0.dot(b.q * x0)).epsilon(1e-15));
  CHECK(tr.actuation_rate() == 0.0);
  CHECK(tr.states.size() == 1);
}

TEST_CASE("reproducibility and common random numbers") {
  Bench b;
  PeriodicController c1(b.periodic(2).policy), c2(b.periodic(2).policy);
  const SimTrace a = simulate_trial(b.dm, b.kf, b.q, b.r, c1, options(300, 42), 5);
  const SimTrace a2 = simulate_trial(b.dm, b.kf, b.q, b.r, c2, options(300, 42), 5);
  CHECK(a.stage_costs == a2.stage_costs);
  CHECK(a.triggers == a2.triggers);
  PeriodicController c3(b.periodic(2).policy);
  const SimTrace other = simulate_trial(b.dm, b.kf, b.q, b.r, c3, options(300, 42), 6);
  CHECK(other.states[0] != a.states[0]);
  // Different policies see the same initial state and first measurement.
  ZeroController z(1);
  const SimTrace zt = simulate_trial(b.dm, b.kf, b.q, b.r, z, options(300, 42), 5);
  CHECK(zt.states[0] == a.states[0]);
  CHECK(zt.outputs[0] == a.outputs[0]);
  CHECK(zt.estimates[0] == a.estimates[0]);
}

TEST_CASE("trigger and input consistency; exact periodic rate") {
  Bench b;
  for (int p : {1, 2, 3, 6}) {
    CAPTURE(p);
    PeriodicController ctrl(b.periodic(p).policy);
    const SimTrace tr = simulate_trial(b.dm, b.kf, b.q, b.r, ctrl, options(600, 7), 0);
    for (std::size_t k = 0; k < tr.triggers.size(); ++k) {
      if (!tr.triggers[k]) CHECK(tr.inputs[k].norm() == 0.0);
      CHECK(tr.triggers[k] == (k % p == 0 ? 1 : 0));
    }
    CHECK(tr.actuation_rate() == 1.0 / p);
  }
  auto tables = b.tables(6, 3, 0.2);
  RolloutController ro(tables);
  const SimTrace tr = simulate_trial(b.dm, b.kf, b.q, b.r, ro, options(600, 7), 0);
  for (std::size_t k = 0; k < tr.triggers.size(); ++k) {
    if (!tr.triggers[k]) CHECK(tr.inputs[k].norm() == 0.0);
  }
}

TEST_CASE("burn-in shifts the recorded window") {
  Bench b;
  PeriodicController c1(b.periodic(3).policy), c2(b.periodic(3).policy);
  const SimTrace full = simulate_trial(b.dm, b.kf, b.q, b.r, c1, options(90, 11), 2);
  SimOptions o = options(30, 11);
  o.burn_in_steps = 60;
  const SimTrace tail = simulate_trial(b.dm, b.kf, b.q, b.r, c2, o, 2);
  REQUIRE(tail.states.size() == 30);
  for (int k = 0; k < 30; ++k) CHECK(tail.states[k] == full.states[60 + k]);
  CHECK(tail.final_state == full.final_state);
}

TEST_CASE("trial results do not depend on the thread count") {
  Bench b;
  RolloutController proto(b.tables(6, 6, 0.1));
  const auto one = run_trials(b.dm, b.kf, b.q, b.r, proto, options(300, 9), 12, 1);
  const auto four = run_trials(b.dm, b.kf, b.q, b.r, proto, options(300, 9), 12, 4);
  REQUIRE(one.size() == four.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].trial == i);
    CHECK(one[i].control_cost == four[i].control_cost);
    CHECK(one[i].actuation_rate == four[i].actuation_rate);
    CHECK(one[i].squared_norms == four[i].squared_norms);
  }
}

TEST_CASE("blow-up is reported") {
  const DiscreteModel dm = scalar_model(10.0);
  SteadyKalman kf = steady_kalman(dm);
  ZeroController z(1);
  const MatrixXd one = MatrixXd::Ones(1, 1);
  CHECK_THROWS_AS(simulate_trial(dm, kf, one, one, z, options(1000, 1), 0), NonFinite);
  CHECK_THROWS_AS(run_trials(dm, kf, one, one, z, options(1000, 1), 3, 2), NonFinite);
  CHECK_THROWS_AS(simulate_trial(dm, kf, one, one, z, options(0, 1), 0), ValidationError);
}

TEST_CASE("metrics and the bound check") {
  std::vector<TrialSummary> t(4);
  const double cost[] = {1.0, 2.0, 3.0, 4.0};
  const double rate[] = {0.5, 0.5, 0.25, 0.25};
  for (int i = 0; i < 4; ++i) {
    t[i].control_cost = cost[i];
    t[i].actuation_rate = rate[i];
  }
  const Metrics m = estimate_metrics(t, 0.4);
  CHECK(m.avg_control_cost == 2.5);
  CHECK(m.avg_actuation_rate == 0.375);
  CHECK(m.total == doctest::Approx(2.65).epsilon(1e-15));
  CHECK(m.stderr_control_cost == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)).epsilon(1e-14));
  CHECK(m.stderr_rate == doctest::Approx(std::sqrt(1.0 / 48.0 / 4.0)).epsilon(1e-14));
  Metrics per = m;
  const RolloutBoundCheck c = check_rollout_bound(m, per, 6);
  CHECK(c.pooled_stderr == doctest::Approx(std::sqrt(2.0) * m.stderr_total).epsilon(1e-14));
  CHECK(c.margin == doctest::Approx(1.0 / 6 + 3 * c.pooled_stderr).epsilon(1e-14));
  CHECK(c.holds);
  Metrics worse = m;
  worse.total += 10.0;
  CHECK_FALSE(check_rollout_bound(worse, per, 6).holds);
  CHECK_THROWS_AS(estimate_metrics(std::vector<TrialSummary>{}, 0.1), ValidationError);
}

TEST_CASE("forced base pattern satisfies the bound with the full 1/h margin") {
  Bench b;
  SimOptions o = options(600, 20240601);
  for (int p : {2, 3}) {
    CAPTURE(p);
    RolloutController ro(b.tables(6, p, 0.2), 1);
    PeriodicController per(b.periodic(p).policy);
    const Metrics mr = estimate_metrics(run_trials(b.dm, b.kf, b.q, b.r, ro, o, 20, 4), 0.2);
    const Metrics mp = estimate_metrics(run_trials(b.dm, b.kf, b.q, b.r, per, o, 20, 4), 0.2);
    const RolloutBoundCheck c = check_rollout_bound(mr, mp, 6);
    CHECK(c.holds);
    CHECK(std::abs(mr.total - mp.total) < 1e-9 * mp.total);
    CHECK(c.margin >= 1.0 / 6 - 1e-9);
  }
}

TEST_CASE("scalar system: rollout h = 4 over period 2 satisfies the bound") {
  DiscreteModel dm = scalar_model(1.0);
  const SteadyKalman kf = steady_kalman(dm);
  dm = with_stationary_initial_covariance(dm, kf);
  const MatrixXd one = MatrixXd::Ones(1, 1);
  for (double theta : {0.1, 1.0, 3.0}) {
    CAPTURE(theta);
    const PeriodicDesign d = design_periodic(dm, one, one, 2, 1.0);
    auto tables = std::make_shared<const RolloutTables>(
        build_tables(dm, one, one, d.policy.cost_matrix, 4, 2, theta, 1.0, kf.err_cov));
    RolloutController ro(tables);
    PeriodicController per(d.policy);
    SimOptions o = options(400, 77);
    const Metrics mr = estimate_metrics(run_trials(dm, kf, one, one, ro, o, 200, 4), theta);
    const Metrics mp = estimate_metrics(run_trials(dm, kf, one, one, per, o, 200, 4), theta);
    CHECK(check_rollout_bound(mr, mp, 4).holds);
  }
}

TEST_CASE("mean-square stability check") {
  Bench b;
  SimOptions o = options(600, 5);
  RolloutController ro(b.tables(6, 6, 0.4));
  const auto stable = run_trials(b.dm, b.kf, b.q, b.r, ro, o, 20, 4);
  std::vector<std::vector<double>> norms;
  for (const auto& t : stable) norms.push_back(t.squared_norms);
  const StabilityReport ok = check_mean_square_stability(norms, 60);
  CHECK(ok.bounded);
  CHECK(ok.window_means.size() == 10);

  ZeroController z(1);
  const auto open = run_trials(b.dm, b.kf, b.q, b.r, z, o, 20, 4);
  norms.clear();
  for (const auto& t : open) norms.push_back(t.squared_norms);
  CHECK_FALSE(check_mean_square_stability(norms, 60).bounded);

  // Synthetic traces: constant is bounded, geometric growth is not.
  std::vector<std::vector<double>> flat(3, std::vector<double>(240, 2.0));
  CHECK(check_mean_square_stability(flat, 60).bounded);
  std::vector<std::vector<double>> grow(3, std::vector<double>(240));
  for (auto& g : grow)
    for (int k = 0; k < 240; ++k) g[k] = std::pow(1.01, k);
  CHECK_FALSE(check_mean_square_stability(grow, 60).bounded);
  CHECK_THROWS_AS(check_mean_square_stability(flat, 61), ValidationError);
}

TEST_CASE("actuation rate decreases with θ under common random numbers") {
  Bench b;
  SimOptions o = options(600, 20240601);
  const double grid[] = {0.02, 0.1, 0.2, 0.4};
  std::vector<Metrics> ms;
  for (double theta : grid) {
    RolloutController ro(b.tables(6, 6, theta));
    ms.push_back(estimate_metrics(run_trials(b.dm, b.kf, b.q, b.r, ro, o, 10, 4), theta));
  }
  for (std::size_t i = 1; i < ms.size(); ++i) {
    const double pooled = std::hypot(ms[i].stderr_rate, ms[i - 1].stderr_rate);
    CHECK(ms[i].avg_actuation_rate <= ms[i - 1].avg_actuation_rate + 2.0 * pooled);
  }
  CHECK(ms.back().avg_actuation_rate < ms.front().avg_actuation_rate);
}
