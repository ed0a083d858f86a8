#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "srollout/plant.hpp"

using namespace srollout;

namespace {

ContinuousModel scalar_continuous(double lambda) {
  ContinuousModel cm;
  cm.a_cont = MatrixXd::Constant(1, 1, lambda);
  cm.b_cont = MatrixXd::Ones(1, 1);
  cm.d_cont = MatrixXd::Ones(1, 1);
  cm.c_cont = MatrixXd::Ones(1, 1);
  cm.meas_noise_intensity = MatrixXd::Ones(1, 1);
  return cm;
}

DiscreteModel scalar_discrete(double a, double b, double w) {
  DiscreteModel dm;
  dm.a = MatrixXd::Constant(1, 1, a);
  dm.b = MatrixXd::Constant(1, 1, b);
  dm.c = MatrixXd::Ones(1, 1);
  dm.proc_cov = MatrixXd::Constant(1, 1, w);
  dm.meas_cov = MatrixXd::Ones(1, 1);
  dm.init_mean = VectorXd::Zero(1);
  dm.init_cov = MatrixXd::Ones(1, 1);
  return dm;
}

}  // namespace

TEST_CASE("benchmark continuous model") {
  const ContinuousModel cm = build_benchmark_model();
  CHECK(cm.a_cont(2, 0) == doctest::Approx(-2 * std::numbers::pi * std::numbers::pi));
  CHECK(std::abs(cm.a_cont(2, 0) + 19.7392) < 1e-4);
  MatrixXd d(4, 1);
  d << 0, 0, 0.4, 0;
  CHECK(cm.d_cont == d);
  MatrixXd c(2, 4);
  c << 1, 0, 0, 0, 0, 1, 0, 0;
  CHECK(cm.c_cont == c);
  CHECK(benchmark_state_weight()(0, 0) == 0.1336);
  CHECK(benchmark_state_weight()(0, 1) == -0.0936);
  CHECK(benchmark_input_weight()(0, 0) == 0.1);
  VectorXd x0(4);
  x0 << 1, -1, 0, 0;
  CHECK(benchmark_initial_mean() == x0);
}

TEST_CASE("discretize: zero dynamics") {
  const DiscreteModel dm = discretize(scalar_continuous(0.0), 0.1);
  CHECK(std::abs(dm.a(0, 0) - 1.0) < 1e-15);
  CHECK(std::abs(dm.b(0, 0) - 0.1) < 1e-15);
  CHECK(std::abs(dm.proc_cov(0, 0) - 0.1) < 1e-15);
  CHECK(std::abs(dm.meas_cov(0, 0) - 10.0) < 1e-12);  // E / ts
}

TEST_CASE("discretize: scalar closed form") {
  for (double lambda : {-2.0, -0.3, 0.7}) {
    CAPTURE(lambda);
    const double ts = 0.1;
    const DiscreteModel dm = discretize(scalar_continuous(lambda), ts);
    CHECK(std::abs(dm.a(0, 0) - std::exp(lambda * ts)) < 1e-14);
    CHECK(std::abs(dm.b(0, 0) - (std::exp(lambda * ts) - 1) / lambda) < 1e-14);
    const double expect = (std::exp(2 * lambda * ts) - 1) / (2 * lambda);
    CHECK(std::abs(dm.proc_cov(0, 0) - expect) < 1e-14);
  }
}

TEST_CASE("discretize: benchmark against quadrature") {
  const ContinuousModel cm = build_benchmark_model();
  const DiscreteModel dm = discretize(cm, 0.1);
  const MatrixXd w_ref = oracle::process_noise_quadrature(cm.a_cont, cm.d_cont, 0.1);
  const MatrixXd b_ref = oracle::input_matrix_quadrature(cm.a_cont, cm.b_cont, 0.1);
  CHECK((dm.proc_cov - w_ref).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((dm.b - b_ref).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((dm.a - oracle::taylor_expm(cm.a_cont * 0.1)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((dm.meas_cov - 1e-4 * MatrixXd::Identity(2, 2)).norm() < 1e-18);
  CHECK(dm.sample_period.has_value());
}

TEST_CASE("discretize: first-order consistency as ts -> 0") {
  const ContinuousModel cm = build_benchmark_model();
  auto err = [&](double ts) {
    const DiscreteModel dm = discretize(cm, ts);
    return ((dm.a - MatrixXd::Identity(4, 4)) / ts - cm.a_cont).norm();
  };
  const double ratio = err(1e-3) / err(1e-4);
  CHECK(ratio > 9.0);
  CHECK(ratio < 11.0);
}

TEST_CASE("discretize: validation") {
  ContinuousModel cm = scalar_continuous(0.0);
  CHECK_THROWS_AS(discretize(cm, 0.0), ValidationError);
  cm.b_cont = MatrixXd::Ones(2, 1);
  CHECK_THROWS_AS(discretize(cm, 0.1), ValidationError);
}

TEST_CASE("build_lifted: p = 1 is the identity lifting") {
  const DiscreteModel dm = discretize(build_benchmark_model(), 0.1);
  const MatrixXd q = benchmark_state_weight();
  const MatrixXd r = benchmark_input_weight();
  const LiftedSystem ls = build_lifted(dm, q, r, 1, 1.0);
  CHECK(ls.a_lift == dm.a);
  CHECK(ls.b_lift == dm.b);
  CHECK(ls.d_lift == MatrixXd::Identity(4, 4));
  CHECK(ls.q_lift == q);
  CHECK(ls.s_lift.norm() == 0.0);
  CHECK(ls.r_lift == r);
  CHECK(ls.d_avg == 0.0);
}

TEST_CASE("build_lifted: scalar p = 2 by hand") {
  const DiscreteModel dm = scalar_discrete(2.0, 1.0, 1.0);
  const LiftedSystem ls = build_lifted(dm, MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1), 2, 1.0);
  CHECK(ls.a_lift(0, 0) == 4.0);
  CHECK(ls.b_lift(0, 0) == 2.0);
  CHECK(ls.q_lift(0, 0) == 5.0);
  CHECK(ls.s_lift(0, 0) == 2.0);
  CHECK(ls.r_lift(0, 0) == 2.0);
  CHECK(ls.d_avg == 1.0);
  // Brute-force two-step cost: x² + u² + (2x + u)² = xᵀQ₂x + 2xS₂u + R₂u².
  for (double x : {-1.0, 0.3, 2.0}) {
    for (double u : {-0.5, 1.5}) {
      const double direct = x * x + u * u + (2 * x + u) * (2 * x + u);
      CHECK(ls.block_cost(VectorXd::Constant(1, x), VectorXd::Constant(1, u)) ==
            doctest::Approx(direct).epsilon(1e-14));
    }
  }
}

TEST_CASE("build_lifted: step equivalence and cost expansion, p = 1..8") {
  const DiscreteModel dm = discretize(build_benchmark_model(), 0.1);
  const MatrixXd q = benchmark_state_weight();
  const MatrixXd r = benchmark_input_weight();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int p = 1; p <= 8; ++p) {
    CAPTURE(p);
    const LiftedSystem ls = build_lifted(dm, q, r, p, 1.0);
    CHECK((ls.q_lift - ls.q_lift.transpose()).norm() <= 1e-12 * ls.q_lift.norm());
    CHECK(linalg::is_pd(ls.r_lift));
    for (int trial = 0; trial < 5; ++trial) {
      VectorXd x(4), u(1), wbar(4 * p);
      for (int i = 0; i < 4; ++i) x(i) = nd(rng);
      u(0) = nd(rng);
      for (int i = 0; i < 4 * p; ++i) wbar(i) = nd(rng);
      VectorXd xs = x;
      double cost = 0.0;
      for (int i = 0; i < p; ++i) {
        const VectorXd ui = i == 0 ? u : VectorXd::Zero(1);
        cost += xs.dot(q * xs) + ui.dot(r * ui);
        xs = dm.a * xs + dm.b * ui + wbar.segment(4 * i, 4);
      }
      const VectorXd lifted = ls.a_lift * x + ls.b_lift * u + ls.d_lift * wbar;
      CHECK((xs - lifted).norm() <= 1e-10 * std::max(1.0, xs.norm()));
      // Noise-free block cost.
      VectorXd xn = x;
      double nominal = 0.0;
      for (int i = 0; i < p; ++i) {
        const VectorXd ui = i == 0 ? u : VectorXd::Zero(1);
        nominal += xn.dot(q * xn) + ui.dot(r * ui);
        xn = dm.a * xn + dm.b * ui;
      }
      CHECK(ls.block_cost(x, u) == doctest::Approx(nominal).epsilon(1e-10));
    }
  }
}

TEST_CASE("build_lifted: d^a(p) non-decreasing; discounted form") {
  const DiscreteModel dm = discretize(build_benchmark_model(), 0.1);
  const MatrixXd q = benchmark_state_weight();
  const MatrixXd r = benchmark_input_weight();
  double prev = -1.0;
  for (int p = 1; p <= 8; ++p) {
    const LiftedSystem ls = build_lifted(dm, q, r, p, 1.0);
    CHECK(ls.d_avg >= prev);
    prev = ls.d_avg;
  }
  CHECK(std::isinf(build_lifted(dm, q, r, 3, 1.0).d_disc));
  // Direct sum for α = 0.9, p = 3: Σ_i α^i Σ_{j<i} tr(QA^jΩA^jᵀ) / (1 − α³).
  const double alpha = 0.9;
  const LiftedSystem ls = build_lifted(dm, q, r, 3, alpha);
  auto t = [&](int j) {
    MatrixXd aj = MatrixXd::Identity(4, 4);
    for (int k = 0; k < j; ++k) aj = dm.a * aj;
    return (q * aj * dm.proc_cov * aj.transpose()).trace();
  };
  const double direct = (alpha * t(0) + alpha * alpha * (t(0) + t(1))) /
                        (1 - alpha * alpha * alpha);
  CHECK(ls.d_disc == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("build_lifted: validation") {
  const DiscreteModel dm = scalar_discrete(1, 1, 1);
  CHECK_THROWS_AS(build_lifted(dm, MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1), 0, 1.0),
                  ValidationError);
  CHECK_THROWS_AS(build_lifted(dm, MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1), 2, 1.5),
                  ValidationError);
  CHECK_THROWS_AS(build_lifted(dm, MatrixXd::Ones(2, 2), MatrixXd::Ones(1, 1), 2, 1.0),
                  ValidationError);
}

TEST_CASE("discrete model validation") {
  DiscreteModel dm = scalar_discrete(1, 1, 1);
  CHECK_NOTHROW(dm.validate());
  dm.proc_cov(0, 0) = 0.0;
  CHECK_THROWS_AS(dm.validate(), ValidationError);
  CHECK_NOTHROW(dm.validate(false));
  dm = scalar_discrete(1, 1, 1);
  dm.init_cov(0, 0) = -1.0;
  CHECK_THROWS_AS(dm.validate(), ValidationError);
}
