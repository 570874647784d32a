#include <benchmark/benchmark.h>

#include "lmsd/experiment.hpp"
#include "lmsd/quadratic.hpp"
#include "lmsd/solver.hpp"

using namespace lmsd;

namespace {

// Args: problem id, m, route index (0 direct, 1 cholesky, 2 qr).
void BM_RunLmsd(benchmark::State& state) {
  const QuadraticProblem p = experiment::generate_benchmark_problem(static_cast<int>(state.range(0)), 100, 1);
  SolverConfig cfg;
  cfg.m = state.range(1);
  cfg.route = static_cast<TkRoute>(state.range(2));
  cfg.stepsize_seed = 1;
  cfg.keep_history = false;
  std::size_t inner = 0;
  for (auto _ : state) {
    const SolveTrace t = run_lmsd(p, cfg);
    inner = t.total_inner_iterations;
    benchmark::DoNotOptimize(t.final_gradient_norm);
  }
  state.counters["inner"] = static_cast<double>(inner);
}
BENCHMARK(BM_RunLmsd)->ArgsProduct({{1, 2, 3, 4, 5}, {1, 5}, {0, 1, 2}})->Unit(benchmark::kMicrosecond);

void BM_RunLmsdLarge(benchmark::State& state) {
  const QuadraticProblem p = build_problem(Spectrum(evenly_spaced(1.0, 1000.0, state.range(0))), 3);
  SolverConfig cfg;
  cfg.m = state.range(1);
  cfg.stepsize_seed = 3;
  cfg.keep_history = false;
  for (auto _ : state) benchmark::DoNotOptimize(run_lmsd(p, cfg).final_gradient_norm);
}
BENCHMARK(BM_RunLmsdLarge)->ArgsProduct({{500, 1000}, {1, 5, 8}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
