#include <benchmark/benchmark.h>

#include "mpcclab/analysis.hpp"
#include "mpcclab/trpipa.hpp"

namespace {

using namespace mpcclab;

const Point kStart{{0.0}, {1.0}, {0.02}, {}};

void BM_DirectionSolve(benchmark::State& state) {
  const MpccProblem prob = counterexample_problem();
  const QpSubproblem qp = build_direction_qp(prob, kStart, {}, 0.1, trust_radius(kStart, 0, 1));
  for (auto _ : state) {
    Direction d = solve_direction_qp(qp);
    benchmark::DoNotOptimize(d);
  }
}
BENCHMARK(BM_DirectionSolve);

void BM_DirectionSolveWarm(benchmark::State& state) {
  const MpccProblem prob = counterexample_problem();
  const QpSubproblem qp = build_direction_qp(prob, kStart, {}, 0.1, trust_radius(kStart, 0, 1));
  const WarmStart warm{solve_direction_qp(qp).active_bound};
  for (auto _ : state) {
    Direction d = solve_direction_qp(qp, &warm);
    benchmark::DoNotOptimize(d);
  }
}
BENCHMARK(BM_DirectionSolveWarm);

void BM_PipaReferenceRun(benchmark::State& state) {
  const MpccProblem prob = counterexample_problem();
  for (auto _ : state) {
    SolveResult r = pipa_solve(prob, PipaConfig{}, kStart);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_PipaReferenceRun);

void BM_TrPipaFullRun(benchmark::State& state) {
  const MpccProblem prob = counterexample_problem();
  for (auto _ : state) {
    SolveResult r = trpipa_solve(prob, default_tr_config(), kStart);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_TrPipaFullRun);

void BM_StationarityResidual(benchmark::State& state) {
  const MpccProblem prob = counterexample_problem();
  const Point limit{{-0.19596304}, {1.19596304}, {1e-11}, {}};
  for (auto _ : state) {
    StationarityResult r = stationarity_residual(prob, limit, 1e-6);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_StationarityResidual);

} // namespace

BENCHMARK_MAIN();
