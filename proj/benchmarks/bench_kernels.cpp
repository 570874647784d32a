#include <benchmark/benchmark.h>

#include <random>

#include "lmsd/dense.hpp"
#include "lmsd/quadratic.hpp"
#include "lmsd/solver.hpp"

using namespace lmsd;

namespace {

// n x m panel of gradients from m steepest-descent steps on an evenly spaced spectrum.
struct Panel {
  QuadraticProblem problem;
  GradientWindow window;
};

Panel make_panel(std::size_t n, std::size_t m) {
  Panel p{build_problem(Spectrum(evenly_spaced(1.0, 10.0, n)), 5), {}};
  const auto steps = random_initial_stepsizes(p.problem.spectrum(), m, 5);
  linalg::Vector x = initial_point(p.problem, 5);
  linalg::Vector g = p.problem.gradient(x);
  for (std::size_t j = 0; j < m; ++j) {
    p.window.gradients.push_back(g);
    p.window.stepsizes.push_back(steps[j]);
    p.window.iterations.push_back(j);
    linalg::axpy(-steps[j], g, x);
    g = p.problem.gradient(x);
  }
  p.window.next = g;
  return p;
}

void BM_ThinQr(benchmark::State& state) {
  linalg::Matrix g(state.range(0), state.range(1));
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) = normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::thin_qr(g));
}
BENCHMARK(BM_ThinQr)->ArgsProduct({{100, 1000, 10000}, {1, 5, 8}});

void BM_ExtendedCholesky(benchmark::State& state) {
  const std::size_t m = state.range(0);
  const Panel p = make_panel(200, m);
  const linalg::Matrix g = build_gradient_matrix(p.window.gradients);
  linalg::Matrix s(m, m + 1);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) s(i, j) = linalg::dot(p.window.gradients[i], p.window.gradients[j]);
    s(i, m) = linalg::dot(p.window.gradients[i], p.window.next);
  }
  for (auto _ : state) benchmark::DoNotOptimize(linalg::partially_extended_cholesky(s));
}
BENCHMARK(BM_ExtendedCholesky)->DenseRange(1, 8);

void BM_SmallEigensolver(benchmark::State& state) {
  const Panel p = make_panel(200, state.range(0));
  GradientWindow w = p.window;
  const linalg::Matrix t = form_t_direct(p.problem, linalg::thin_qr(build_gradient_matrix(w.gradients)).q);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::symmetric_eigenvalues_small(t));
}
BENCHMARK(BM_SmallEigensolver)->DenseRange(1, 8);

void BM_HessianTimes(benchmark::State& state) {
  const Panel p = make_panel(state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(p.problem.hessian_times(p.window.next));
}
BENCHMARK(BM_HessianTimes)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
