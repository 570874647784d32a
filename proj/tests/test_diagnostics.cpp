#include <gtest/gtest.h>

#include <cmath>

#include "lmsd/diagnostics.hpp"
#include "lmsd/errors.hpp"
#include "lmsd/quadratic.hpp"
#include "lmsd/solver.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace lmsd;
using namespace lmsd::diagnostics;
using linalg::Matrix;
using linalg::Vector;

namespace {

std::vector<double> integers(std::size_t n) { return evenly_spaced(1.0, static_cast<double>(n), n); }

SolveTrace solve(const QuadraticProblem& p, std::size_t m, std::uint64_t seed) {
  SolverConfig cfg;
  cfg.m = m;
  cfg.stepsize_seed = seed;
  return run_lmsd(p, cfg);
}

// f = 1/2 x^T diag(1,2) x with Q = I, one step of length 1/2 from (1,1).
struct HandTrace {
  QuadraticProblem problem{Spectrum({1.0, 2.0}), Matrix::identity(2), Vector(2), Vector(2), 0,
                           BMode::kZeroMinimizer};
  SolveTrace trace;

  HandTrace() {
    IterationHistory h;
    h.iterates = {Vector{1.0, 1.0}, Vector{0.5, 0.0}};
    h.gradients = {Vector{1.0, 2.0}, Vector{0.5, 0.0}};
    h.stepsizes = {0.5};
    trace.history = h;
    trace.total_inner_iterations = 1;
  }
};

}  // namespace

TEST(ContractionConstants, TwoPointSpectrumSingleMemory) {
  const ContractionConstants c = compute_contraction_constants(Spectrum({1.0, 100.0}), 1);
  EXPECT_DOUBLE_EQ(c.step_factors(0, 0), 0.99);
  EXPECT_DOUBLE_EQ(c.cycle_factors[0], 0.99);
  EXPECT_DOUBLE_EQ(c.step_factors(0, 1), 99.0);
}

TEST(ContractionConstants, NarrowSpectrumIsQLinear) {
  const Spectrum s(evenly_spaced(1.0, 1.9, 100));
  const ContractionConstants c = compute_contraction_constants(s, 1);
  EXPECT_NEAR(c.worst_cycle_factor, 0.9, 1e-15);
  EXPECT_LT(c.worst_cycle_factor, 1.0);
}

TEST(ContractionConstants, MatchBruteForceOracle) {
  for (std::size_t m : {1u, 2u, 5u}) {
    const std::vector<double> lambda = evenly_spaced(1.0, 100.0, 30);
    const ContractionConstants c = compute_contraction_constants(Spectrum(lambda), m);
    ASSERT_EQ(c.m, m);
    ASSERT_EQ(c.n, 30u);
    double worst = 0.0;
    for (std::size_t i = 1; i <= 30; ++i) {
      for (std::size_t j = 1; j <= m; ++j) {
        EXPECT_NEAR(c.step_factors(j - 1, i - 1), oracle::step_factor(lambda, m, j, i), 1e-15);
      }
      const double cf = oracle::cycle_factor(lambda, m, i);
      EXPECT_NEAR(c.cycle_factors[i - 1], cf, 1e-13 * std::max(1.0, cf));
      worst = std::max(worst, cf);
    }
    EXPECT_NEAR(c.worst_cycle_factor, worst, 1e-13 * worst);
    for (std::size_t j = 1; j <= m; ++j) {
      for (std::size_t p = 1; p <= 30; ++p) {
        double want = 0.0;
        for (std::size_t i = 1; i <= p; ++i) want = std::max(want, oracle::step_factor(lambda, m, j, i));
        EXPECT_NEAR(c.prefix_step_factors(j - 1, p - 1), want, 1e-15);
      }
    }
  }
}

TEST(ContractionConstants, FirstChannelAlwaysContracts) {
  for (unsigned seed = 1; seed <= 40; ++seed) {
    const oracle::Mat r = oracle::random_matrix(1, 12, seed);
    std::vector<double> lambda;
    for (double x : r[0]) lambda.push_back(std::exp(3.0 * x));
    const Spectrum s(lambda);
    for (std::size_t m = 1; m <= 12; m += 3) {
      const ContractionConstants c = compute_contraction_constants(s, m);
      EXPECT_GE(c.cycle_factors[0], 0.0);
      EXPECT_LT(c.cycle_factors[0], 1.0) << "seed " << seed << " m " << m;
    }
  }
}

TEST(ContractionConstants, RepeatedSmallestEigenvalue) {
  const ContractionConstants c = compute_contraction_constants(Spectrum({2.0, 2.0, 8.0}), 1);
  EXPECT_DOUBLE_EQ(c.step_factors(0, 0), 1.0 - 2.0 / 8.0);
}

TEST(ContractionConstants, NarrowRandomSpectraHaveWorstFactorBelowOne) {
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const oracle::Mat r = oracle::random_matrix(1, 15, seed);
    std::vector<double> lambda;
    for (double x : r[0]) lambda.push_back(1.0 + 0.45 * (1.0 + std::tanh(x)));
    const ContractionConstants c = compute_contraction_constants(Spectrum(lambda), 1 + seed % 4);
    EXPECT_LT(c.worst_cycle_factor, 1.0);
  }
}

TEST(ProofConstants, SingleMemoryStackedFactorIsOne) {
  const ProofConstants pc = compute_proof_constants(Spectrum(integers(10)), 1, 3, 0.1, 2, 1.0);
  EXPECT_EQ(pc.stacked_factor, 1.0);
}

TEST(ProofConstants, LargestNextEigenvalueGivesOneThirdPower) {
  const Spectrum s({1.0, 5.0, 5.0});
  for (std::size_t m = 1; m <= 3; ++m) {
    const ProofConstants pc = compute_proof_constants(s, m, 1, 1e-3, 1, 1.0);
    EXPECT_NEAR(pc.guaranteed_contraction, std::pow(1.0 / 3.0, m), 1e-15);
  }
}

TEST(ProofConstants, CatchUpCyclesMatchBruteForceFormula) {
  const std::vector<double> lambda = integers(100);
  const std::size_t m = 5, p = 1, k_p = 5;
  const double eps = 1e-3, rho = 1.0;
  const ProofConstants pc = compute_proof_constants(Spectrum(lambda), m, p, eps, k_p, rho);

  long double stacked = 1.0L, term = 1.0L;
  for (std::size_t j = 1; j < m; ++j) {
    double dh = 0.0;
    for (std::size_t i = 1; i <= p; ++i) dh = std::max(dh, oracle::step_factor(lambda, m, j, i));
    term *= static_cast<long double>(dh) * dh;
    stacked += term;
  }
  EXPECT_NEAR(pc.stacked_factor, static_cast<double>(stacked), 1e-14);
  const long double base =
      std::pow(std::max<long double>(1.0L / 3.0L, 1.0L - lambda[p] / lambda.back()), m);
  EXPECT_NEAR(pc.guaranteed_contraction, static_cast<double>(base), 1e-15);
  const long double next = oracle::cycle_factor(lambda, m, p + 1);
  const long double arg = 2.0L * stacked * rho * eps * std::pow(next, -static_cast<long double>(k_p + 1));
  ASSERT_TRUE(pc.catch_up_cycles.has_value());
  EXPECT_EQ(*pc.catch_up_cycles, oracle::ceiling_by_search(arg, base));
}

TEST(ProofConstants, RejectsOutOfRangeInputs) {
  const Spectrum s(integers(10));
  EXPECT_THROW(compute_proof_constants(s, 2, 0, 0.01, 1, 1.0), ContractViolation);
  EXPECT_THROW(compute_proof_constants(s, 2, 10, 0.01, 1, 1.0), ContractViolation);
  EXPECT_THROW(compute_proof_constants(s, 2, 1, 0.0, 1, 1.0), ContractViolation);
  EXPECT_THROW(compute_proof_constants(s, 1, 1, 0.5, 1, 1.0), ContractViolation);
  EXPECT_THROW(compute_proof_constants(s, 2, 1, 0.01, 0, 1.0), ContractViolation);
  EXPECT_THROW(compute_proof_constants(s, 2, 1, 0.01, 1, 0.5), ContractViolation);
  EXPECT_NO_THROW(compute_proof_constants(s, 1, 1, 0.49, 1, 1.0));
}

TEST(WeightRecursion, HandTraceIsExact) {
  const HandTrace h;
  const WeightRecursionReport r = verify_weight_recursion(h.trace, h.problem);
  EXPECT_EQ(r.max_residual, 0.0);
  EXPECT_EQ(r.steps_checked, 1u);
  EXPECT_EQ(r.max_gradient_norm, std::sqrt(5.0));
  EXPECT_TRUE(r.passed);
}

TEST(WeightRecursion, CorruptedGradientFails) {
  HandTrace h;
  h.trace.history->gradients[1] = Vector{0.6, 0.0};
  const WeightRecursionReport r = verify_weight_recursion(h.trace, h.problem);
  EXPECT_NEAR(r.max_residual, 0.1, 1e-15);
  EXPECT_FALSE(r.passed);
}

TEST(WeightRecursion, ReciprocalEigenvalueStepAnnihilatesChannel) {
  const HandTrace h;
  const WeightTrace w = compute_weight_trace(h.trace, h.problem);
  EXPECT_EQ(w.weights[1][1], 0.0);
}

TEST(WeightRecursion, RandomRunPasses) {
  const QuadraticProblem p = build_problem(Spectrum(evenly_spaced(1, 100, 100)), 5, BMode::kRandom);
  const WeightRecursionReport r = verify_weight_recursion(solve(p, 5, 5), p);
  EXPECT_TRUE(r.passed) << r.max_residual;
  EXPECT_GT(r.steps_checked, 10u);
}

TEST(WeightRecursion, MissingHistoryIsContractViolation) {
  const QuadraticProblem p = build_problem(Spectrum({1.0, 2.0}), 1);
  SolveTrace t;
  EXPECT_THROW(verify_weight_recursion(t, p), ContractViolation);
  IterationHistory h;
  h.gradients = {Vector(2), Vector(2)};
  t.history = h;
  EXPECT_THROW(verify_weight_recursion(t, p), ContractViolation);
}

TEST(Interlacing, SingleMemoryRunStaysInSpectrumRange) {
  const QuadraticProblem p = build_problem(Spectrum(evenly_spaced(1, 100, 50)), 2);
  const SolveTrace t = solve(p, 1, 2);
  const InterlacingReport r = verify_interlacing(t, p.spectrum());
  EXPECT_TRUE(r.passed);
  for (const CycleRecord& c : t.cycles) {
    if (!c.harvested) continue;
    EXPECT_GE(c.ritz_values[0], 1.0 * (1 - 1e-12));
    EXPECT_LE(c.ritz_values[0], 100.0 * (1 + 1e-12));
  }
}

TEST(Interlacing, FullMemoryRecoversEigenvalues) {
  const std::vector<double> lambda{1.0, 3.0, 4.0, 9.0};
  const QuadraticProblem p = build_problem(Spectrum(lambda), 3, BMode::kRandom);
  SolverConfig cfg;
  cfg.m = 4;
  cfg.stepsize_seed = 3;
  cfg.epsilon = 1e-10;
  const SolveTrace t = run_lmsd(p, cfg);
  ASSERT_TRUE(t.cycles[0].harvested);
  ASSERT_EQ(t.cycles[0].columns_used, 4u);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(t.cycles[0].ritz_values[j], lambda[3 - j], 1e-8 * 9.0);
  }
  EXPECT_TRUE(verify_interlacing(t, p.spectrum()).passed);
}

TEST(Interlacing, DetectsValueOutsideBracket) {
  const QuadraticProblem p = build_problem(Spectrum(evenly_spaced(1, 100, 50)), 2);
  SolveTrace t = solve(p, 3, 2);
  ASSERT_TRUE(t.cycles[1].harvested);
  t.cycles[1].ritz_values[0] = 150.0;
  const InterlacingReport r = verify_interlacing(t, p.spectrum());
  EXPECT_FALSE(r.passed);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].k, 2u);
  EXPECT_EQ(r.violations[0].j, 1u);
  EXPECT_EQ(r.violations[0].upper, 100.0);
}

TEST(Interlacing, ProblemThreeRunHasNoViolations) {
  std::vector<double> lambda;
  for (double lo : {1.0, 25.0, 50.0, 75.0, 99.0}) {
    for (double v : evenly_spaced(lo, lo + 1, 20)) lambda.push_back(v);
  }
  const QuadraticProblem p = build_problem(Spectrum(lambda), 4);
  const InterlacingReport r = verify_interlacing(solve(p, 5, 4), p.spectrum());
  EXPECT_TRUE(r.passed);
  EXPECT_GT(r.values_checked, 0u);
}

// With b = 0 the gradient A x keeps full relative accuracy as x approaches the
// minimizer; A x - b with b != 0 cancels and the identities lose digits.
TEST(RitzIdentities, SingleMemoryMatchesNormalizedWeights) {
  const QuadraticProblem p = build_problem(Spectrum(evenly_spaced(1, 100, 40)), 6);
  const SolveTrace t = solve(p, 1, 6);
  const RitzConsistency rc = verify_ritz_identities(t, p);
  EXPECT_TRUE(rc.passed);
  EXPECT_LE(rc.max_unit_residual, 1e-13);
  for (const CycleRecord& c : t.cycles) {
    if (!c.harvested) continue;
    const Vector d = p.weights(t.history->gradients[c.window_start]);
    long double num = 0.0L, den = 0.0L;
    for (std::size_t i = 0; i < d.size(); ++i) {
      num += static_cast<long double>(p.spectrum().at(i)) * d[i] * d[i];
      den += static_cast<long double>(d[i]) * d[i];
    }
    EXPECT_LE(testing_support::relative_gap(c.ritz_values[0], static_cast<double>(num / den)), 1e-12);
  }
}

TEST(RitzIdentities, FullMemoryCycleIsCoordinatePermutation) {
  const QuadraticProblem p = build_problem(Spectrum({1.0, 3.0, 4.0, 9.0}), 3, BMode::kRandom);
  SolverConfig cfg;
  cfg.m = 4;
  cfg.stepsize_seed = 3;
  const SolveTrace t = run_lmsd(p, cfg);
  const RitzConsistency rc = verify_ritz_identities(t, p);
  EXPECT_LE(rc.max_unit_residual, 1e-8);
  EXPECT_LE(rc.max_value_residual, 1e-8);
}

TEST(RitzIdentities, FallbackCyclesAreSkipped) {
  std::vector<double> lambda(12, 1.0);
  for (std::size_t i = 6; i < 12; ++i) lambda[i] = 10.0;
  const QuadraticProblem p = build_problem(Spectrum(lambda), 21, BMode::kRandom);
  const SolveTrace t = solve(p, 5, 21);
  ASSERT_FALSE(t.cycles[0].fallback_events.empty());
  const RitzConsistency rc = verify_ritz_identities(t, p);
  ASSERT_FALSE(rc.skipped_cycles.empty());
  EXPECT_EQ(rc.skipped_cycles[0], 1u);
}

TEST(RitzIdentities, ConditionIsReportedPerValue) {
  const QuadraticProblem p = build_problem(Spectrum(evenly_spaced(1, 100, 100)), 2);
  const RitzConsistency rc = verify_ritz_identities(solve(p, 5, 2), p);
  ASSERT_FALSE(rc.residuals.empty());
  std::size_t ill = 0;
  for (const RitzResidual& r : rc.residuals) {
    EXPECT_GE(r.condition, 1.0 - 1e-12);
    if (r.condition > kRitzConditionLimit) ++ill;
  }
  EXPECT_EQ(ill, rc.ill_conditioned_values);
  EXPECT_LE(rc.max_unit_residual_conditioned, rc.max_unit_residual);
}

TEST(CycleContraction, NarrowSpectrumContractsEveryCycle) {
  const QuadraticProblem p = build_problem(Spectrum(evenly_spaced(1.0, 1.9, 100)), 1);
  const SolveTrace t = solve(p, 1, 1);
  const ContractionConstants cc = compute_contraction_constants(p.spectrum(), 1);
  const ContractionReport r = verify_cycle_contraction(t, p, cc);
  EXPECT_TRUE(r.passed);
  EXPECT_GT(r.spans_checked, 5u);
  const auto starts = cycle_start_norms(t);
  for (std::size_t k = 0; k + 1 < starts.size(); ++k) {
    EXPECT_LE(starts[k + 1], 0.9 * starts[k] + kInequalitySlack * starts[k]) << "cycle " << k + 1;
  }
}

TEST(CycleContraction, WideSpectrumRunHasNoViolations) {
  const QuadraticProblem p = build_problem(Spectrum(evenly_spaced(1, 100, 100)), 8);
  const SolveTrace t = solve(p, 5, 8);
  const ContractionReport r =
      verify_cycle_contraction(t, p, compute_contraction_constants(p.spectrum(), 5));
  EXPECT_TRUE(r.passed);
  EXPECT_TRUE(r.channel_one_violations.empty());
}

TEST(CycleContraction, MismatchedConstantsAreContractViolation) {
  const QuadraticProblem p = build_problem(Spectrum(evenly_spaced(1, 100, 20)), 8);
  const SolveTrace t = solve(p, 2, 8);
  EXPECT_THROW(verify_cycle_contraction(t, p, compute_contraction_constants(p.spectrum(), 3)),
               ContractViolation);
}

TEST(HalfLife, NarrowSpectrumHalvesWithinSevenCycles) {
  const QuadraticProblem p = build_problem(Spectrum(evenly_spaced(1.0, 1.9, 100)), 3);
  const HalfLifeReport h = empirical_half_life(solve(p, 1, 3));
  ASSERT_TRUE(h.half_life.has_value());
  EXPECT_LE(*h.half_life, 7u);
  EXPECT_TRUE(h.envelope_holds);
  EXPECT_DOUBLE_EQ(h.c2, std::pow(2.0, -1.0 / static_cast<double>(*h.half_life)));
}

TEST(HalfLife, HandNormsGiveExpectedConstants) {
  SolveTrace t;
  t.status = SolveStatus::kConverged;
  for (std::size_t k = 0; k < 4; ++k) {
    CycleRecord c;
    c.k = k + 1;
    c.stepsizes = {0.1};
    c.steps_taken = 1;
    const double start = std::pow(0.6, static_cast<double>(k));
    c.gradient_norms = {start, 0.6 * start};
    c.harvested = k < 3;
    t.cycles.push_back(c);
  }
  const HalfLifeReport h = empirical_half_life(t);
  EXPECT_EQ(h.cycle_starts, 5u);
  ASSERT_TRUE(h.half_life.has_value());
  EXPECT_EQ(*h.half_life, 2u);
  EXPECT_NEAR(h.measured_cycle_factor, 0.6, 1e-15);
  EXPECT_DOUBLE_EQ(h.c1, 2.0);
  EXPECT_TRUE(h.passed);
}

TEST(HalfLife, FiniteTerminationSatisfiesEnvelope) {
  const QuadraticProblem p = build_problem(Spectrum({1.0, 2.0, 3.0}), 8, BMode::kRandom);
  SolverConfig cfg;
  cfg.m = 3;
  cfg.epsilon = 1e-10;
  cfg.initial_stepsizes = {1.0 / 3.0, 0.5, 1.0};
  const HalfLifeReport h = empirical_half_life(run_lmsd(p, cfg));
  EXPECT_TRUE(h.passed);
}

TEST(HalfLife, WideSpectrumLongMemoryHasFiniteHalfLife) {
  const QuadraticProblem p = build_problem(Spectrum(evenly_spaced(1, 100, 100)), 9);
  const HalfLifeReport h = empirical_half_life(solve(p, 5, 9));
  ASSERT_TRUE(h.half_life.has_value());
  EXPECT_TRUE(h.envelope_holds);
}

TEST(HalfLife, ShortTraceIsContractViolation) {
  const QuadraticProblem p = build_problem(Spectrum({1.0, 2.0}), 1);
  const SolveTrace t = run_lmsd(p, SolverConfig{}, Vector(2));
  EXPECT_THROW(empirical_half_life(t), ContractViolation);
}

TEST(CycleStartNorms, CappedRunInsideCycleOmitsPartialEnd) {
  const QuadraticProblem p = build_problem(Spectrum(evenly_spaced(1, 100, 30)), 2);
  SolverConfig cfg;
  cfg.m = 4;
  cfg.max_total_iterations = 6;
  const SolveTrace t = run_lmsd(p, cfg);
  ASSERT_EQ(t.cycles.size(), 2u);
  EXPECT_EQ(cycle_start_norms(t).size(), 2u);
}

TEST(RunAll, CombinesEveryCheck) {
  const QuadraticProblem p = build_problem(Spectrum(evenly_spaced(1.0, 1.9, 60)), 4);
  const DiagnosticsReport r = run_all(solve(p, 1, 4), p);
  EXPECT_TRUE(r.passed);
  ASSERT_TRUE(r.half_life.has_value());
  EXPECT_EQ(r.constants.m, 1u);
}
