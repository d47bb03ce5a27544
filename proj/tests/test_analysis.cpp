#include <cmath>

#include "doctest.h"
#include "mpcclab/analysis.hpp"
#include "mpcclab/trpipa.hpp"
#include "oracles.hpp"

using namespace mpcclab;

namespace {
const Point kStart{{0.0}, {1.0}, {0.02}, {}};

SolveResult lemma_run(int iters) {
  PipaConfig cfg;
  cfg.max_iter = iters;
  cfg.eps_term = 1e-300;
  return pipa_solve(counterexample_problem(), cfg, kStart);
}
} // namespace

TEST_CASE("limit_bound_constants") {
  const auto [x_limit, y_limit] = limit_bound_constants();
  CHECK(x_limit == doctest::Approx(-0.4828427125).epsilon(1e-9));
  CHECK(y_limit == doctest::Approx(1.4828427125).epsilon(1e-9));
  CHECK(x_limit + y_limit == 1.0); // exact algebraic identity
}

TEST_CASE("verify_lemma_bounds: the reference 10-row trace passes") {
  const SolveResult result = pipa_solve(counterexample_problem(), PipaConfig{}, kStart);
  const VerificationReport report = verify_lemma_bounds(result.trace);
  CHECK(report.checked_pairs == 9);
  CHECK(report.all_passed());
  CHECK(report.min_tau >= 5.0 / 9.0);
  CHECK(report.max_tau <= 1.0);
}

TEST_CASE("verify_lemma_bounds: 50-iteration run passes every bound") {
  const SolveResult result = lemma_run(50);
  const VerificationReport report = verify_lemma_bounds(result.trace);
  CHECK(report.checked_pairs == 50);
  CHECK(report.all_passed());
  CHECK(report.x_above_limit);
  CHECK(report.y_below_limit);
}

TEST_CASE("verify_lemma_bounds: planted violations are flagged at the right row") {
  SolveResult result = pipa_solve(counterexample_problem(), PipaConfig{}, kStart);
  result.trace[4].tau = 0.5; // below 5/9
  const VerificationReport report = verify_lemma_bounds(result.trace);
  CHECK_FALSE(report.all_passed());
  CHECK(report.fail_count[4] == 1);
  CHECK(report.first_fail[4] == 5);
  const std::string text = report_to_text(report);
  CHECK(text.find("FAIL") != std::string::npos);
  const std::string csv = report_to_csv(report);
  CHECK(csv.find("5,1,1,1,1,0") != std::string::npos);
}

TEST_CASE("check_assumptions at the true solution") {
  const MpccProblem prob = counterexample_problem();
  const AssumptionCheck chk = check_assumptions(prob, Point{{-1.0}, {2.0}, {0.0}, {}}, 0.5);
  CHECK(chk.sc_holds); // y + w = 2
  CHECK(chk.ns_holds); // [[1,0],[0,2]] is nonsingular
  CHECK(chk.min_singular_value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(chk.min_pair_sum == doctest::Approx(2.0));
}

TEST_CASE("check_assumptions at the plain run's limit") {
  const MpccProblem prob = counterexample_problem();
  const AssumptionCheck chk = check_assumptions(prob, Point{{-0.196}, {1.196}, {0.0}, {}}, 0.5);
  CHECK(chk.sc_holds);
  CHECK(chk.ns_holds); // nonsingular for every y in [1, 1.4828]
}

TEST_CASE("check_assumptions: biactive pair fails strict complementarity") {
  const MpccProblem prob = counterexample_problem();
  const AssumptionCheck chk = check_assumptions(prob, Point{{1.0}, {0.0}, {0.0}, {}}, 1e-8);
  CHECK_FALSE(chk.sc_holds);
}

TEST_CASE("check_assumptions holds at every iterate of the 50-iteration run") {
  const MpccProblem prob = counterexample_problem();
  const SolveResult result = lemma_run(50);
  for (const TraceRecord& rec : result.trace) {
    const AssumptionCheck chk = check_assumptions(prob, rec.point, 0.5);
    CHECK(chk.sc_holds);
    CHECK(chk.ns_holds);
  }
}

TEST_CASE("stationarity_residual: zero at the true solution") {
  const MpccProblem prob = counterexample_problem();
  const StationarityResult st = stationarity_residual(prob, Point{{-1.0}, {2.0}, {0.0}, {}}, 1e-6);
  CHECK(st.residual <= 1e-10);
  CHECK_FALSE(st.infeasibility_warning);
}

TEST_CASE("stationarity_residual: exactly one at the plain run's limit") {
  const MpccProblem prob = counterexample_problem();
  const StationarityResult st =
      stationarity_residual(prob, Point{{-0.19596304}, {1.19596304}, {1.4586827e-11}, {}}, 1e-6);
  CHECK(st.residual == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_FALSE(st.infeasibility_warning);
}

TEST_CASE("stationarity_residual: zero gradient at an interior point") {
  MpccProblem prob = counterexample_problem();
  prob.objective = [](const Point&) { return 3.0; };
  prob.objective_gradient = [](const Point&) { return Vec{0.0, 0.0, 0.0}; };
  const StationarityResult st = stationarity_residual(prob, Point{{0.3}, {0.7}, {0.5}, {}}, 1e-6);
  CHECK(st.residual <= 1e-10);
}

TEST_CASE("stationarity_residual: infeasible points carry a warning") {
  const MpccProblem prob = counterexample_problem();
  const StationarityResult st = stationarity_residual(prob, Point{{0.5}, {1.0}, {0.1}, {}}, 1e-6);
  CHECK(st.infeasibility_warning); // F = 0.5 there
}

TEST_CASE("stationarity_residual is invariant under positive row scaling of F") {
  const MpccProblem base = counterexample_problem();
  const Point limit{{-0.19596304}, {1.19596304}, {1e-12}, {}};
  const double r0 = stationarity_residual(base, limit, 1e-6).residual;
  for (double s : {0.1, 3.0, 10.0}) {
    MpccProblem scaled = base;
    scaled.equality_map = [s](const Point& p) { return Vec{s * (-1.0 + p.x[0] + p.y[0])}; };
    scaled.equality_jacobian = [s](const Point&) { return DenseMatrix(1, 3, {s, s, 0.0}); };
    const double rs = stationarity_residual(scaled, limit, 1e-6).residual;
    CHECK(rs == doctest::Approx(r0).epsilon(1e-9));
  }
}

TEST_CASE("stationarity_residual: biactive pair uses sign-constrained multipliers") {
  // min -y - w type objective at a biactive corner wants negative
  // multipliers on both branches; the sign constraint forbids that and the
  // residual must stay positive
  MpccProblem prob = counterexample_problem();
  prob.objective = [](const Point& p) { return p.x[0] - p.y[0] - p.w[0]; };
  prob.objective_gradient = [](const Point&) { return Vec{1.0, -1.0, -1.0}; };
  prob.equality_map = [](const Point&) { return Vec{0.0}; };
  prob.equality_jacobian = [](const Point&) { return DenseMatrix(1, 3, {0.0, 0.0, 0.0}); };
  const StationarityResult st = stationarity_residual(prob, Point{{0.0}, {0.0}, {0.0}, {}}, 1e-6);
  CHECK(st.residual >= 1.0); // both nu's clamped at zero leaves (-1, -1) unmatched
}

TEST_CASE("compare_to_reference: faithful run") {
  const SolveResult result = pipa_solve(counterexample_problem(), PipaConfig{}, kStart);
  const ReferenceComparison cmp = compare_to_reference(result.trace);
  // every stored cell matches to 1e-6 except the final w entry, which
  // carries the original run's solver noise (~1.5e-4); see the acceptance
  // suite output for the full statement
  CHECK(cmp.max_rel_dev >= 1e-4);
  CHECK(cmp.max_rel_dev <= 2e-4);
  CHECK(cmp.worst_row == 10);
  CHECK(cmp.worst_field == 'w');
  CHECK(cmp.reductions_ok);
  CHECK_FALSE(cmp.iterates_ok);

  // excluding that single cell, the deviation is at the print precision
  auto trimmed = result.trace;
  trimmed[9].point.w[0] = oracle::ampl_reference()[9].w;
  const ReferenceComparison cmp2 = compare_to_reference(trimmed);
  CHECK(cmp2.max_rel_dev <= 1e-6);
  CHECK(cmp2.iterates_ok);
}

TEST_CASE("compare_to_reference: wrong fallback step is detected early") {
  PipaConfig cfg;
  cfg.eps_frac = 0.01; // tau fallback becomes 0.99
  cfg.max_iter = 12;
  cfg.eps_term = 1e-300;
  const SolveResult result = pipa_solve(counterexample_problem(), cfg, kStart);
  const ReferenceComparison cmp = compare_to_reference(result.trace);
  CHECK(cmp.max_rel_dev > 1e-3);
}

TEST_CASE("compare_to_reference: short traces raise") {
  CHECK_THROWS_AS(compare_to_reference({}), TraceTooShortError);
  const SolveResult result = lemma_run(5);
  CHECK_THROWS_AS(compare_to_reference(result.trace), TraceTooShortError);
}

TEST_CASE("50-iteration run stays inside the compact set") {
  const SolveResult result = lemma_run(50);
  const auto [x_limit, y_limit] = limit_bound_constants();
  for (std::size_t i = 1; i < result.trace.size(); ++i) {
    const TraceRecord& rec = result.trace[i];
    CHECK(rec.point.x[0] >= x_limit);
    CHECK(rec.point.x[0] <= 0.0);
    CHECK(rec.point.y[0] >= 1.0);
    CHECK(rec.point.y[0] <= y_limit);
    CHECK(rec.point.w[0] <= 0.5 * result.trace[i - 1].point.w[0]);
  }
  CHECK(result.trace.back().point.w[0] < 1e-14);
}
