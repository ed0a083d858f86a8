#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "srollout/dp_oracle.hpp"
#include "srollout/estimator.hpp"
#include "srollout/periodic.hpp"
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
};

DiscreteModel scalar_unit() {
  DiscreteModel dm;
  dm.a = dm.b = dm.c = dm.proc_cov = dm.meas_cov = MatrixXd::Ones(1, 1);
  dm.init_mean = VectorXd::Zero(1);
  dm.init_cov = MatrixXd::Ones(1, 1);
  return dm;
}

VectorXd random_vector(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd;
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

}  // namespace

TEST_CASE("oracle agrees with the tabulated rollout scores") {
  Bench b;
  std::mt19937_64 rng(17);
  for (int p : {6, 3, 2}) {
    CAPTURE(p);
    const MatrixXd term = design_periodic(b.dm, b.q, b.r, p, 1.0).policy.cost_matrix;
    const RolloutTables t = build_tables(b.dm, b.q, b.r, term, 6, p, 0.2, 1.0, b.kf.err_cov);
    for (int k = 0; k < 10; ++k) {
      const VectorXd x = random_vector(rng, 4);
      const OracleResult o =
          oracle_select(b.dm, b.q, b.r, term, 6, p, 0.2, 1.0, x, b.kf.err_cov);
      CHECK(o.best_pattern == select_pattern(t, x, b.kf.err_cov));
      REQUIRE(o.all_scores.size() == 64);
      for (int m = 1; m <= 64; ++m) {
        const double s = pattern_score(t, m, x, b.kf.err_cov);
        CHECK(std::abs(o.all_scores[m - 1] - s) <= 1e-8 * std::abs(s));
      }
    }
  }
}

TEST_CASE("discounted oracle agrees with the tabulated scores") {
  Bench b;
  const MatrixXd term = design_periodic(b.dm, b.q, b.r, 3, 0.9).policy.cost_matrix;
  const RolloutTables t = build_tables(b.dm, b.q, b.r, term, 6, 3, 0.1, 0.9, b.kf.err_cov);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 5; ++k) {
    const VectorXd x = random_vector(rng, 4);
    const OracleResult o = oracle_select(b.dm, b.q, b.r, term, 6, 3, 0.1, 0.9, x, b.kf.err_cov);
    for (int m = 1; m <= 64; ++m) {
      const double s = pattern_score(t, m, x, b.kf.err_cov);
      CHECK(std::abs(o.all_scores[m - 1] - s) <= 1e-8 * std::abs(s));
    }
  }
}

TEST_CASE("scalar one-step lookahead by hand") {
  DiscreteModel dm = scalar_unit();
  const SteadyKalman kf = steady_kalman(dm);
  const MatrixXd one = MatrixXd::Ones(1, 1);
  const double term = 2.0, theta = 0.3, xh = 1.5;
  const double sigma = kf.err_cov(0, 0);
  const OracleResult o = oracle_select(dm, one, one, MatrixXd::Constant(1, 1, term), 1, 1, theta,
                                       1.0, VectorXd::Constant(1, xh), kf.err_cov);
  const double second = xh * xh + sigma;
  const double idle = second + term * (second + 1.0);
  const double k = -term / (term + 1.0);
  const double act = second + k * k * xh * xh + term * ((1 + k) * (1 + k) * xh * xh + sigma + 1.0) + theta;
  CHECK(o.all_scores[0] == doctest::Approx(act).epsilon(1e-13));
  CHECK(o.all_scores[1] == doctest::Approx(idle).epsilon(1e-13));
  CHECK(o.best_pattern == (act < idle ? 1 : 2));
}

TEST_CASE("scores scale with the cost weights") {
  Bench b;
  const MatrixXd term = design_periodic(b.dm, b.q, b.r, 6, 1.0).policy.cost_matrix;
  std::mt19937_64 rng(1);
  const VectorXd x = random_vector(rng, 4);
  const double c = 7.5;
  const OracleResult o1 = oracle_select(b.dm, b.q, b.r, term, 6, 6, 0.2, 1.0, x, b.kf.err_cov);
  const OracleResult o2 =
      oracle_select(b.dm, c * b.q, c * b.r, c * term, 6, 6, c * 0.2, 1.0, x, b.kf.err_cov);
  CHECK(o1.best_pattern == o2.best_pattern);
  for (std::size_t m = 0; m < o1.all_scores.size(); ++m) {
    CHECK(o2.all_scores[m] == doctest::Approx(c * o1.all_scores[m]).epsilon(1e-11));
  }
}

TEST_CASE("base pattern oracle cost equals the periodic closed form") {
  Bench b;
  std::mt19937_64 rng(23);
  for (int p : {1, 2, 3, 6}) {
    CAPTURE(p);
    const PeriodicDesign d = design_periodic(b.dm, b.q, b.r, p, 1.0);
    const MatrixXd& pt = d.policy.cost_matrix;
    const LiftedSystem& ls = d.lifted;
    const double H = 6.0 / p;
    const double block =
        (pt * ls.d_lift * ls.proc_cov_lift * ls.d_lift.transpose()).trace() +
        (d.policy.gain_quadratic * b.kf.err_cov).trace() + ls.d_avg;
    const VectorXd x = random_vector(rng, 4);
    const TriggerPattern base = enumerate_patterns(6, p).front();
    const double cost =
        oracle_pattern_cost(b.dm, b.q, b.r, pt, base, 0.2, 1.0, x, b.kf.err_cov);
    const double closed = x.dot(pt * x) + (pt * b.kf.err_cov).trace() + H * block + H * 0.2;
    CHECK(cost == doctest::Approx(closed).epsilon(1e-9));
  }
}

TEST_CASE("closed-loop block matrices") {
  Bench b;
  const MatrixXd term = design_periodic(b.dm, b.q, b.r, 6, 1.0).policy.cost_matrix;
  const RolloutTables t = build_tables(b.dm, b.q, b.r, term, 6, 6, 0.2, 1.0, b.kf.err_cov);
  int idle = 0;
  for (const auto& pat : t.patterns)
    if (pat.actuation_count == 0) idle = pat.index;
  const ClosedLoopMatrices zero = closed_loop_matrices(t, idle);
  MatrixXd a6 = MatrixXd::Identity(4, 4);
  for (int i = 0; i < 6; ++i) a6 = b.dm.a * a6;
  CHECK((zero.phi - a6).norm() <= 1e-14 * a6.norm());
  CHECK((zero.gamma.rightCols(4) - MatrixXd::Identity(4, 4)).norm() == 0.0);
  CHECK((zero.gamma.leftCols(4) - a6 * b.dm.a.inverse()).norm() <= 1e-12 * a6.norm());

  const ClosedLoopMatrices base = closed_loop_matrices(t, 1);
  const double rho = base.phi.eigenvalues().cwiseAbs().maxCoeff();
  CHECK(rho < 1.0);
  CHECK(zero.phi.eigenvalues().cwiseAbs().maxCoeff() >= 1.0);
  CHECK_THROWS_AS(closed_loop_matrices(t, 0), ValidationError);
  CHECK_THROWS_AS(closed_loop_matrices(t, 65), ValidationError);
}

TEST_CASE("block estimate propagation identity on a simulated trace") {
  Bench b;
  const MatrixXd term = design_periodic(b.dm, b.q, b.r, 3, 1.0).policy.cost_matrix;
  auto t = std::make_shared<const RolloutTables>(
      build_tables(b.dm, b.q, b.r, term, 6, 3, 0.1, 1.0, b.kf.err_cov));
  RolloutController ro(t);
  SimOptions o;
  o.horizon_steps = 120;
  o.seed = 3;
  const SimTrace tr = simulate_trial(b.dm, b.kf, b.q, b.r, ro, o, 1);
  const auto& hist = ro.selection_history();
  REQUIRE(hist.size() == 20);
  for (int l = 0; l + 1 < 20; ++l) {
    const int m = hist[l];
    const ClosedLoopMatrices cl = closed_loop_matrices(*t, m);
    // Innovation part of each step: ω_i = x̂_{i+1} − Θ_i x̂_i.
    VectorXd stacked(4 * 6);
    for (int i = 0; i < 6; ++i) {
      const int k = 6 * l + i;
      MatrixXd theta_i = b.dm.a;
      if (t->pattern(m).bits[i]) theta_i += b.dm.b * t->gains[m - 1][i];
      stacked.segment(4 * i, 4) = tr.estimates[k + 1] - theta_i * tr.estimates[k];
    }
    const VectorXd pred = cl.phi * tr.estimates[6 * l] + cl.gamma * stacked;
    const VectorXd& actual = tr.estimates[6 * (l + 1)];
    CHECK((pred - actual).norm() <= 1e-10 * std::max(1.0, actual.norm()));
  }
}
