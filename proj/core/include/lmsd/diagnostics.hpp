#pragma once

// Post-hoc checks of an LMSD run against the spectrum of its problem.
//
// Notation used below (one-based, eigenvalues ascending):
//   d_{t,i}   weight of gradient g_t along eigenvector q_i (d = Q^T g),
//   step factor        delta_{j,i} = max(|1 - lambda_i/lambda_{m+1-j}|, |1 - lambda_i/lambda_{n+1-j}|),
//   cycle factor       Delta_i = prod_j delta_{j,i},   worst cycle factor Delta = max_i Delta_i.
// A cycle whose stepsizes are reciprocals of interlaced Ritz values contracts
// channel i by at most Delta_i.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lmsd/dense.hpp"
#include "lmsd/quadratic.hpp"
#include "lmsd/solver.hpp"

namespace lmsd::diagnostics {

/// Additive slack, relative to the local gradient norm, for inequality checks.
inline constexpr double kInequalitySlack = 1e-9;
inline constexpr double kRecursionTolerance = 1e-10;
inline constexpr double kInterlacingSlack = 1e-8;
inline constexpr double kRitzTolerance = 1e-8;

struct ContractionConstants {
  std::size_t m = 0;
  std::size_t n = 0;
  linalg::Matrix step_factors;  ///< m x n, entry (j, i) is delta_{j+1,i+1}
  std::vector<double> cycle_factors;  ///< Delta_i, length n
  double worst_cycle_factor = 0.0;  ///< Delta
  /// m x n, entry (j, p) is max_{i <= p} delta_{j+1,i+1}.
  linalg::Matrix prefix_step_factors;
};

ContractionConstants compute_contraction_constants(const Spectrum& spectrum, std::size_t m);

/// Constants governing how quickly the weight of channel p+1 is driven down
/// once channels 1..p are small (p is one-based, 1 <= p <= n-1):
///   stacked_factor        1 + dh_1^2 + dh_1^2 dh_2^2 + ... + prod_{j<m} dh_j^2,
///                         with dh_j the prefix step factor at p
///   guaranteed_contraction  max(1/3, 1 - lambda_{p+1}/lambda_n)^m
///   catch_up_cycles       ceil(log(2 stacked rho eps_p Delta_{p+1}^{-(K_p+1)})
///                              / log(guaranteed_contraction))
/// eps_p and K_p are inputs; eps_p must lie in (0, 1/(2 stacked rho)).
struct ProofConstants {
  std::size_t p = 0;
  double epsilon_p = 0.0;
  std::size_t k_p = 0;
  double rho = 1.0;
  double stacked_factor = 1.0;
  double guaranteed_contraction = 0.0;
  /// Unrounded quotient inside the ceiling.
  double catch_up_quotient = 0.0;
  /// Empty when the quotient is not finite (cycle factor of channel p+1 is 0).
  std::optional<long long> catch_up_cycles;
};

ProofConstants compute_proof_constants(const Spectrum& spectrum, std::size_t m, std::size_t p,
                                       double epsilon_p, std::size_t k_p, double rho);

/// Weights of every retained gradient; row t is d for g_t.
struct WeightTrace {
  std::vector<linalg::Vector> weights;
};

/// Requires a trace with history; throws ContractViolation otherwise.
WeightTrace compute_weight_trace(const SolveTrace& trace, const QuadraticProblem& problem);

struct WeightRecursionReport {
  double max_residual = 0.0;
  double max_gradient_norm = 0.0;
  std::size_t steps_checked = 0;
  bool passed = false;
};

/// |d_{t+1,i} - (1 - alpha_t lambda_i) d_{t,i}| over every step and channel.
WeightRecursionReport verify_weight_recursion(const SolveTrace& trace,
                                              const QuadraticProblem& problem);

struct InterlacingViolation {
  std::size_t k = 0;
  std::size_t j = 0;  ///< one-based position of the Ritz value
  double theta = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct InterlacingReport {
  std::vector<InterlacingViolation> violations;
  std::size_t values_checked = 0;
  bool passed = false;
};

/// theta_{k,j} in [lambda_{mt+1-j}, lambda_{n+1-j}] where mt is the number
/// of columns actually used in cycle k.
InterlacingReport verify_interlacing(const SolveTrace& trace, const Spectrum& spectrum);

struct RitzResidual {
  std::size_t k = 0;
  std::size_t j = 0;
  double unit_residual = 0.0;  ///< |c^T c - 1|
  double value_residual = 0.0;  ///< |theta - c^T Lambda c| / lambda_n
  /// Condition number of R with unit columns. Forming D R^{-1} loses about
  /// this factor times the unit roundoff.
  double condition = 0.0;
};

/// Cycles whose normalized condition times the unit roundoff exceeds the
/// Ritz tolerance cannot meet it in double precision.
inline constexpr double kRitzConditionLimit = 1e7;

/// c_{k,j} = D_k R_k^{-1} q_{k,j}, with D_k the weights of the columns used.
struct RitzConsistency {
  std::vector<RitzResidual> residuals;
  std::vector<std::size_t> skipped_cycles;  ///< cycles with fallback events
  double max_unit_residual = 0.0;
  double max_value_residual = 0.0;
  /// Same maxima restricted to cycles with condition <= kRitzConditionLimit.
  double max_unit_residual_conditioned = 0.0;
  double max_value_residual_conditioned = 0.0;
  std::size_t ill_conditioned_values = 0;
  /// Every residual within kRitzTolerance (only fallback cycles are exempt).
  bool passed = false;
};

RitzConsistency verify_ritz_identities(const SolveTrace& trace, const QuadraticProblem& problem);

struct ContractionViolation {
  std::size_t k = 0;
  std::size_t j = 0;
  std::size_t i = 0;  ///< 0 for the gradient-norm bound
  double observed = 0.0;
  double bound = 0.0;
};

struct ContractionReport {
  std::vector<ContractionViolation> component_violations;
  std::vector<ContractionViolation> gradient_violations;
  /// |d_{k+1,1,1}| <= |d_{k,1,1}| between consecutive cycle starts.
  std::vector<ContractionViolation> channel_one_violations;
  std::size_t spans_checked = 0;
  std::size_t spans_skipped = 0;
  bool passed = false;
};

/// Checks |d_{k+1,j,i}| <= Delta_i |d_{k,j,i}| and ||g_{k+1,j}|| <= Delta ||g_{k,j}||
/// on every span (k,j) -> (k+1,j) whose stepsizes all come from full-memory
/// harvests (or, for m = 1, from [1/lambda_n, 1/lambda_1]).
ContractionReport verify_cycle_contraction(const SolveTrace& trace,
                                           const QuadraticProblem& problem,
                                           const ContractionConstants& constants);

struct HalfLifeReport {
  /// Smallest K with ||g_{k+K,1}|| <= ||g_{k,1}|| / 2 for every k in the trace.
  std::optional<std::size_t> half_life;
  double measured_cycle_factor = 0.0;  ///< max_k ||g_{k+1,1}|| / ||g_{k,1}||
  double c1 = 0.0;  ///< 2 max(1, measured)^(K-1)
  double c2 = 0.0;  ///< 2^(-1/K)
  bool envelope_holds = false;
  std::size_t cycle_starts = 0;
  bool passed = false;
};

/// Throws ContractViolation when the trace has fewer than two cycle starts.
HalfLifeReport empirical_half_life(const SolveTrace& trace);

/// Norms of g_{k,1} for every cycle start reached. The final gradient is
/// appended when the run ended on a cycle boundary, or when it stopped on the
/// tolerance: a terminated run keeps its last iterate, so that gradient is
/// also the start of the next (never executed) cycle.
std::vector<double> cycle_start_norms(const SolveTrace& trace);

struct DiagnosticsReport {
  WeightRecursionReport weight_recursion;
  InterlacingReport interlacing;
  RitzConsistency ritz;
  ContractionReport contraction;
  std::optional<HalfLifeReport> half_life;  ///< empty for runs shorter than two cycles
  ContractionConstants constants;
  bool passed = false;
};

DiagnosticsReport run_all(const SolveTrace& trace, const QuadraticProblem& problem);

}  // namespace lmsd::diagnostics
