#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "mpcclab/subqp.hpp"
#include "oracles.hpp"

using namespace mpcclab;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
const Point kStart{{0.0}, {1.0}, {0.02}, {}};
} // namespace

TEST_CASE("trust_radius") {
  CHECK(trust_radius(kStart, 0.0, 1.0) == doctest::Approx(0.02).epsilon(1e-14));
  CHECK(std::sqrt(trust_radius(kStart, 0.0, 1.0)) ==
        doctest::Approx(0.1414213562).epsilon(1e-9));
  CHECK(trust_radius(Point{{0.0}, {1.0}, {0.0}, {}}, 0.0, 1.0) == 0.0);
  CHECK(trust_radius(Point{{0.0}, {1.0}, {1.0}, {}}, 1.0, 2.0) == doctest::Approx(4.0));
}

TEST_CASE("build_direction_qp: counterexample at the start point") {
  const MpccProblem prob = counterexample_problem();
  const QpSubproblem qp = build_direction_qp(prob, kStart, {}, 0.1, 0.02);
  REQUIRE(qp.eq_rows() == 2);
  REQUIRE(qp.total_vars() == 3);
  // d_x + d_y = 0
  CHECK(qp.eq_matrix(0, 0) == 1.0);
  CHECK(qp.eq_matrix(0, 1) == 1.0);
  CHECK(qp.eq_matrix(0, 2) == 0.0);
  CHECK(qp.eq_rhs[0] == doctest::Approx(0.0));
  // 0.02 d_y + 1 d_w = -0.02 + 0.1 * 0.02 = -0.018
  CHECK(qp.eq_matrix(1, 1) == doctest::Approx(0.02));
  CHECK(qp.eq_matrix(1, 2) == doctest::Approx(1.0));
  CHECK(qp.eq_rhs[1] == doctest::Approx(-0.018).epsilon(1e-14));
  // x box is the trust-region box, tighter than [-1, 1]
  CHECK(qp.d_lower[0] == doctest::Approx(-0.1414213562).epsilon(1e-9));
  CHECK(qp.d_upper[0] == doctest::Approx(0.1414213562).epsilon(1e-9));
  CHECK(qp.tr_limits_lower[0] == 1);
  CHECK(qp.tr_limits_upper[0] == 1);
  CHECK(qp.d_lower[1] == -kInf);
  CHECK(qp.d_upper[2] == kInf);
}

TEST_CASE("build_direction_qp: zero radius pins d_x") {
  const MpccProblem prob = counterexample_problem();
  const QpSubproblem qp = build_direction_qp(prob, kStart, {}, 0.1, 0.0);
  CHECK(qp.d_lower[0] == 0.0);
  CHECK(qp.d_upper[0] == 0.0);
  const Direction dir = solve_direction_qp(qp);
  CHECK(dir.d_x[0] == 0.0);
}

TEST_CASE("build_direction_qp: rhs approaches zero as sigma -> 1") {
  const MpccProblem prob = counterexample_problem();
  const QpSubproblem qp = build_direction_qp(prob, kStart, {}, 0.99, 0.02);
  // for m = 1 the complementarity rhs is (sigma - 1) y w
  CHECK(qp.eq_rhs[1] == doctest::Approx((0.99 - 1.0) * 0.02).epsilon(1e-12));
}

TEST_CASE("build_direction_qp: x box contains zero at feasible points") {
  const MpccProblem prob = counterexample_problem();
  std::mt19937 rng(33u);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Point p;
    p.x = {-1.0 + 2.0 * unit(rng)};
    p.y = {0.5 + unit(rng)};
    p.w = {0.001 + 0.1 * unit(rng)};
    const QpSubproblem qp = build_direction_qp(prob, p, {}, 0.1, 0.01 + unit(rng));
    CHECK(qp.d_lower[0] <= 0.0);
    CHECK(qp.d_upper[0] >= 0.0);
  }
}

TEST_CASE("build_direction_qp: interiority violations raise") {
  const MpccProblem prob = counterexample_problem();
  CHECK_THROWS_AS(build_direction_qp(prob, Point{{0.0}, {1.0}, {0.0}, {}}, {}, 0.1, 0.02),
                  InteriorityError);
  CHECK_THROWS_AS(build_direction_qp(prob, Point{{0.0}, {-1.0}, {0.02}, {}}, {}, 0.1, 0.02),
                  InteriorityError);
}

TEST_CASE("counterexample_direction: closed form at the start") {
  const Direction d = counterexample_direction(kStart, 0.1);
  CHECK(d.d_x[0] == doctest::Approx(-0.1414213562373095).epsilon(1e-13));
  CHECK(d.d_y[0] == doctest::Approx(0.1414213562373095).epsilon(1e-13));
  CHECK(d.d_w[0] == doctest::Approx(-0.020828427124746189).epsilon(1e-13));
  CHECK(d.eq_multipliers[0] == doctest::Approx(-0.02).epsilon(1e-13));
  CHECK(d.eq_multipliers[1] == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(d.tr_multiplier == doctest::Approx(1.02).epsilon(1e-13));
}

TEST_CASE("counterexample_direction: second reference row inputs") {
  const Direction d = counterexample_direction(Point{{0.0}, {1.0960226}, {0.0058578644}, {}}, 0.1);
  CHECK(d.d_x[0] == doctest::Approx(-0.080127097602093633).epsilon(1e-12));
}

TEST_CASE("counterexample_direction: w = 0 gives the zero step") {
  const Direction d = counterexample_direction(Point{{0.0}, {1.5}, {0.0}, {}}, 0.1);
  CHECK(d.d_x[0] == 0.0);
  CHECK(d.d_y[0] == 0.0);
  CHECK(d.d_w[0] == 0.0);
}

TEST_CASE("solve_direction_qp: start-point subproblem matches the closed form") {
  const MpccProblem prob = counterexample_problem();
  const QpSubproblem qp = build_direction_qp(prob, kStart, {}, 0.1, trust_radius(kStart, 0, 1));
  const Direction d = solve_direction_qp(qp);
  CHECK(d.d_x[0] == doctest::Approx(-0.1414213562373095).epsilon(1e-12));
  CHECK(d.d_y[0] == doctest::Approx(0.1414213562373095).epsilon(1e-12));
  CHECK(d.d_w[0] == doctest::Approx(-0.020828427124746189).epsilon(1e-12));
  CHECK(d.eq_multipliers[0] == doctest::Approx(-0.02).epsilon(1e-10));
  CHECK(d.eq_multipliers[1] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(d.active_bound[0] == BoundSide::Lower);
  CHECK(d.tr_active[0] == 1);
  CHECK(d.tr_multiplier == doctest::Approx(1.02).epsilon(1e-10));
  CHECK(kkt_residual(qp, d) <= 1e-9);
}

TEST_CASE("solve_direction_qp: zero data gives the zero step") {
  QpSubproblem qp;
  qp.n_x = 1;
  qp.m = 1;
  qp.n_z = 0;
  qp.linear_cost = {0.0, 0.0, 0.0};
  qp.eq_matrix = DenseMatrix(2, 3, {1, 1, 0, 0, 0.5, 1});
  qp.eq_rhs = {0.0, 0.0};
  qp.d_lower = {-1.0, -kInf, -kInf};
  qp.d_upper = {1.0, kInf, kInf};
  qp.tr_limits_lower = {0};
  qp.tr_limits_upper = {0};
  const Direction d = solve_direction_qp(qp);
  CHECK(norm(d.stacked(), Norm::Inf) <= 1e-12);
}

TEST_CASE("solve_direction_qp: oracle equivalence on random interior points") {
  // general active-set solve against the closed form; x-bound kept inactive
  const MpccProblem prob = counterexample_problem();
  std::mt19937 rng(314159u);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Point p;
    p.y = {1.0 + 0.5 * unit(rng)};
    p.x = {1.0 - p.y[0]}; // on the linear constraint, both x-bounds slack
    p.w = {0.02 * (1e-6 + (1.0 - 1e-6) * unit(rng))};
    const QpSubproblem qp = build_direction_qp(prob, p, {}, 0.1, trust_radius(p, 0, 1));
    const Direction got = solve_direction_qp(qp);
    const Direction want = counterexample_direction(p, 0.1);
    CHECK(std::abs(got.d_x[0] - want.d_x[0]) <= 1e-10);
    CHECK(std::abs(got.d_y[0] - want.d_y[0]) <= 1e-10);
    CHECK(std::abs(got.d_w[0] - want.d_w[0]) <= 1e-10);
    CHECK(std::abs(got.eq_multipliers[0] - want.eq_multipliers[0]) <= 1e-8);
    CHECK(std::abs(got.eq_multipliers[1] - want.eq_multipliers[1]) <= 1e-8);
    CHECK(std::abs(got.tr_multiplier - want.tr_multiplier) <= 1e-8);
    CHECK(kkt_residual(qp, got) <= 1e-9);
  }
}

TEST_CASE("solve_direction_qp: random tiny LPs match exhaustive enumeration") {
  std::mt19937 rng(271828u);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 3); // up to 4 vars
    // shape: n-1 box-bounded "x" variables plus one auxiliary, one equality
    QpSubproblem qp;
    qp.n_x = n - 1;
    qp.m = 0;
    qp.n_z = 1;
    qp.linear_cost.resize(n);
    qp.d_lower.resize(n);
    qp.d_upper.resize(n);
    qp.tr_limits_lower.assign(qp.n_x, 0);
    qp.tr_limits_upper.assign(qp.n_x, 0);
    for (std::size_t j = 0; j < n; ++j) {
      qp.linear_cost[j] = unit(rng);
      const double a = unit(rng), b = unit(rng);
      qp.d_lower[j] = std::min(a, b);
      qp.d_upper[j] = std::max(a, b) + 0.1;
    }
    // one equality row through a box-interior point, so the draw is feasible
    DenseMatrix eq(1, n);
    double rhs = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      eq(0, j) = unit(rng);
      rhs += eq(0, j) * 0.5 * (qp.d_lower[j] + qp.d_upper[j]);
    }
    qp.eq_matrix = eq;
    qp.eq_rhs = {rhs};

    const auto best = oracle::enumerate_box_qp(qp);
    REQUIRE(best.found);
    const Direction got = solve_direction_qp(qp);
    double value = dot(qp.linear_cost, got.stacked());
    CHECK(value == doctest::Approx(best.value).epsilon(1e-9));
    CHECK(kkt_residual(qp, got) <= 1e-9);
  }
}

TEST_CASE("solve_direction_qp: quadratic term perturbs the solution by O(delta)") {
  const MpccProblem prob = counterexample_problem();
  const QpSubproblem qp0 = build_direction_qp(prob, kStart, {}, 0.1, trust_radius(kStart, 0, 1));
  const Direction base = solve_direction_qp(qp0);
  for (double delta : {1e-3, 1e-4, 1e-5}) {
    DenseMatrix q(1, 1, {delta});
    const QpSubproblem qp = build_direction_qp(prob, kStart, q, 0.1, trust_radius(kStart, 0, 1));
    const Direction got = solve_direction_qp(qp);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(std::abs(got.stacked()[j] - base.stacked()[j]) <= 10.0 * delta);
      CHECK(got.active_bound[j] == base.active_bound[j]);
    }
    CHECK(got.tr_active[0] == 1);
    CHECK(kkt_residual(qp, got) <= 1e-9);
  }
}

TEST_CASE("solve_direction_qp: strictly convex QP against enumeration") {
  std::mt19937 rng(5555u);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    QpSubproblem qp;
    qp.n_x = 2;
    qp.m = 1;
    qp.n_z = 0;
    qp.linear_cost = {unit(rng), unit(rng), unit(rng), unit(rng)};
    qp.quadratic = DenseMatrix(2, 2, {1.0 + unit(rng) * 0.5, 0.1, 0.1, 1.0 + unit(rng) * 0.5});
    DenseMatrix eq(2, 4);
    for (std::size_t j = 0; j < 4; ++j) eq(0, j) = unit(rng);
    eq(1, 1) = 0.3;
    eq(1, 2) = 1.1; // complementarity-like row over (y, w)
    qp.eq_matrix = eq;
    qp.eq_rhs = {unit(rng) * 0.1, unit(rng) * 0.1};
    qp.d_lower = {-0.4, -kInf, -kInf, -kInf};
    qp.d_upper = {0.4, kInf, kInf, kInf};
    qp.d_lower[1] = -0.5; // also box the second x component
    qp.d_upper[1] = 0.5;
    qp.tr_limits_lower = {0, 0};
    qp.tr_limits_upper = {0, 0};

    const auto best = oracle::enumerate_box_qp(qp);
    if (!best.found) continue; // skip infeasible draws
    Direction got;
    try {
      got = solve_direction_qp(qp);
    } catch (const InfeasibleSubproblemError&) {
      continue;
    }
    double value = dot(qp.linear_cost, got.stacked());
    const Vec d = got.stacked();
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) value += 0.5 * d[i] * qp.quadratic(i, j) * d[j];
    CHECK(value == doctest::Approx(best.value).epsilon(1e-8));
    CHECK(kkt_residual(qp, got) <= 1e-8);
  }
}

TEST_CASE("solve_direction_qp: inconsistent rows raise") {
  QpSubproblem qp;
  qp.n_x = 1;
  qp.m = 1;
  qp.n_z = 0;
  qp.linear_cost = {1.0, 0.0, 0.0};
  qp.eq_matrix = DenseMatrix(2, 3, {0, 0, 0, 0, 0, 0});
  qp.eq_rhs = {1.0, 0.0};
  qp.d_lower = {-1.0, -kInf, -kInf};
  qp.d_upper = {1.0, kInf, kInf};
  qp.tr_limits_lower = {0};
  qp.tr_limits_upper = {0};
  CHECK_THROWS_AS(solve_direction_qp(qp), InfeasibleSubproblemError);
}

TEST_CASE("solve_direction_qp: box-infeasible equality raises") {
  QpSubproblem qp;
  qp.n_x = 1;
  qp.m = 0;
  qp.n_z = 1;
  qp.linear_cost = {1.0, 1.0};
  qp.eq_matrix = DenseMatrix(1, 2, {1, 1});
  qp.eq_rhs = {10.0}; // unreachable inside the box
  qp.d_lower = {-1.0, -1.0};
  qp.d_upper = {1.0, 1.0};
  qp.tr_limits_lower = {0};
  qp.tr_limits_upper = {0};
  CHECK_THROWS_AS(solve_direction_qp(qp), InfeasibleSubproblemError);
}

TEST_CASE("solve_direction_qp: warm start reproduces the cold solution") {
  const MpccProblem prob = counterexample_problem();
  std::mt19937 rng(99u);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Point p = kStart;
  WarmStart warm;
  for (int step = 0; step < 20; ++step) {
    const QpSubproblem qp = build_direction_qp(prob, p, {}, 0.1, trust_radius(p, 0, 1));
    const Direction cold = solve_direction_qp(qp);
    if (step > 0) {
      const Direction hot = solve_direction_qp(qp, &warm);
      CHECK(std::abs(hot.d_x[0] - cold.d_x[0]) <= 1e-12);
      CHECK(std::abs(hot.d_w[0] - cold.d_w[0]) <= 1e-12);
    }
    warm.bound_state = cold.active_bound;
    p.y[0] = 1.0 + 0.4 * unit(rng);
    p.w[0] = 0.02 * (0.05 + 0.95 * unit(rng));
  }
}
