#pragma once

// Limited memory steepest descent for strongly convex quadratics.
//
// Iterations run in cycles. Cycle k applies the stepsizes harvested at the
// end of cycle k-1 (smallest first); at the end of the cycle the most recent
// gradients G = [g_1 ... g_m] and the next gradient g_{m+1} define a small
// projected matrix T whose eigenvalues (Ritz values of A) are inverted to give
// the stepsizes of cycle k+1.
//
// T can be formed three ways that agree in exact arithmetic:
//   direct    T = Q^T A Q with G = QR (needs products with A),
//   cholesky  G^T [G g_{m+1}] = R^T [R r],  T = [R r] J R^{-1},
//   qr        G = QR,  T = [R  Q^T g_{m+1}] J R^{-1},
// where J is the (m+1) x m bidiagonal matrix of reciprocal stepsizes.
//
// When G is numerically rank deficient, when ||R^{-1}|| exceeds
// rho / ||g_oldest||, or when T yields a nonpositive Ritz value, the oldest
// column of G is dropped and T is rebuilt. A single column always succeeds
// and reduces to the Barzilai-Borwein stepsize.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "lmsd/dense.hpp"
#include "lmsd/errors.hpp"
#include "lmsd/quadratic.hpp"

namespace lmsd {

enum class TkRoute { kDirect, kCholesky, kQr };

std::string_view to_string(TkRoute route);
TkRoute parse_route(std::string_view text);

struct SolverConfig {
  std::size_t m = 1;
  double epsilon = 1e-8;
  double rho = 1e8;
  TkRoute route = TkRoute::kQr;
  /// Stepsizes for the first cycle. When empty, m values are drawn uniformly
  /// from [1/lambda_max, 1/lambda_min] using `stepsize_seed`.
  std::vector<double> initial_stepsizes;
  std::uint64_t stepsize_seed = 0;
  /// 0 selects 100 * n.
  std::size_t max_total_iterations = 0;
  bool fallback_enabled = true;
  /// Retain every iterate and gradient (needed by the diagnostics).
  bool keep_history = true;

  /// Throws ContractViolation when a field is out of range.
  void validate() const;
};

enum class SolveStatus { kConverged, kIterationCap, kFiniteTermination };

std::string_view to_string(SolveStatus status);
SolveStatus parse_status(std::string_view text);

enum class FallbackReason { kRankDeficiency, kRhoBound, kDegenerateRitz };

std::string_view to_string(FallbackReason reason);
FallbackReason parse_fallback_reason(std::string_view text);

struct FallbackEvent {
  /// Global iteration index of the gradient column that was dropped.
  std::size_t dropped_iteration = 0;
  /// Columns present before the drop.
  std::size_t columns_before = 0;
  FallbackReason reason = FallbackReason::kRankDeficiency;

  friend bool operator==(const FallbackEvent&, const FallbackEvent&) = default;
};

/// One outer cycle. Global iteration t counts gradients: g_t is the gradient
/// at x_t, and stepsize t moves x_t to x_{t+1}.
struct CycleRecord {
  std::size_t k = 0;  ///< 1-based cycle index
  std::size_t first_iteration = 0;  ///< global index of g_{k,1}
  std::vector<double> stepsizes;  ///< planned for this cycle, increasing when harvested
  /// Columns of the harvest that produced `stepsizes`; 0 for the initial cycle.
  std::size_t stepsize_columns = 0;
  std::size_t steps_taken = 0;
  std::vector<double> gradient_norms;  ///< ||g_{k,1}|| ... ||g_{k,steps_taken+1}||

  // End-of-cycle harvest; absent when the run stopped inside the cycle.
  bool harvested = false;
  std::vector<double> ritz_values;  ///< decreasing
  std::size_t columns_used = 0;
  std::size_t window_start = 0;  ///< global index of the oldest column used
  double r_inv_norm = 0.0;
  linalg::Matrix r_factor;  ///< R for the columns used
  linalg::Matrix ritz_vectors;  ///< unit eigenvectors of the symmetrized T
  std::vector<FallbackEvent> fallback_events;
};

struct IterationHistory {
  std::vector<linalg::Vector> iterates;
  std::vector<linalg::Vector> gradients;
  std::vector<double> stepsizes;  ///< stepsizes[t] maps x_t to x_{t+1}
};

struct SolveTrace {
  SolveStatus status = SolveStatus::kIterationCap;
  std::size_t m = 1;
  TkRoute route = TkRoute::kQr;
  linalg::Vector final_x;
  double final_gradient_norm = 0.0;
  std::size_t total_inner_iterations = 0;
  std::size_t gradient_evaluations = 0;
  std::vector<CycleRecord> cycles;
  std::optional<IterationHistory> history;

  /// Number of cycles in which at least one step was taken.
  std::size_t outer_cycles() const noexcept;
};

/// Carries the partial trace of a run that could not continue.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, SolveTrace trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const SolveTrace& trace() const noexcept { return trace_; }

 private:
  SolveTrace trace_;
};

/// A projected matrix produced a Ritz value that is nonpositive or nonfinite.
class DegenerateRitz : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- building blocks ------------------------------------------------------

/// (m+1) x m lower bidiagonal matrix of reciprocal stepsizes.
struct StepsizePanel {
  linalg::Matrix j;

  static StepsizePanel from_stepsizes(std::span<const double> stepsizes);
};

/// Stacks the stored gradients as columns (oldest first).
linalg::Matrix build_gradient_matrix(std::span<const linalg::Vector> gradients);

/// T = Q_k^T A Q_k.
linalg::Matrix form_t_direct(const QuadraticProblem& problem, const linalg::Matrix& q_k);

struct CholeskyProjection {
  linalg::Matrix t;
  linalg::Matrix r;
};

/// T = [R r] J R^{-1} with G^T [G g_next] = R^T [R r]. The factors come from
/// three partially extended Cholesky passes: one on the shifted Gram matrix,
/// then two on the Gram matrices of the basis G R^{-1} computed so far.
/// Throws RankDeficiency when a pivot fails or a diagonal entry of R falls
/// below kRankTolerance * ||G||_F.
CholeskyProjection form_t_cholesky(const linalg::Matrix& g, const linalg::Vector& g_next,
                                   const StepsizePanel& panel);

/// T = [R  Q_k^T g_next] J R^{-1}.
linalg::Matrix form_t_qr(const linalg::Matrix& r, const linalg::Matrix& q_k,
                         const linalg::Vector& g_next, const StepsizePanel& panel);

struct HarvestedStepsizes {
  std::vector<double> ritz_values;  ///< decreasing
  linalg::Matrix ritz_vectors;
  std::vector<double> stepsizes;  ///< reciprocals, increasing
};

/// Eigenvalues of the symmetrized T and their reciprocals. Throws
/// DegenerateRitz for a nonpositive or nonfinite value. When `bounds` is
/// given, Ritz values outside [lambda_min, lambda_max] (1e-8 relative slack)
/// raise ContractViolation.
HarvestedStepsizes harvest_stepsizes(const linalg::Matrix& t, const Spectrum* bounds = nullptr);

/// Most recent gradients of the run with the stepsizes that followed them.
/// Columns are contiguous in iteration order, so consecutive gradients obey
/// g_{t+1} = (I - alpha_t A) g_t and J is well defined.
struct GradientWindow {
  std::vector<linalg::Vector> gradients;
  std::vector<double> stepsizes;
  std::vector<std::size_t> iterations;
  linalg::Vector next;  ///< gradient following the newest column

  std::size_t size() const noexcept { return gradients.size(); }
};

/// Removes the oldest column (and its stepsize).
void fallback_drop_column(GradientWindow& window);

struct HarvestOptions {
  TkRoute route = TkRoute::kQr;
  double rho = 1e8;
  bool fallback_enabled = true;
};

struct HarvestResult {
  HarvestedStepsizes harvested;
  std::size_t columns_used = 0;
  std::size_t window_start = 0;
  double r_inv_norm = 0.0;
  linalg::Matrix r_factor;
  std::vector<FallbackEvent> events;
};

/// Builds T from the window, dropping the oldest columns until the
/// factorization succeeds, ||R^{-1}|| <= rho / ||g_oldest|| and every Ritz
/// value is positive. On return `window` holds only the columns used.
/// Throws RankDeficiency / DegenerateRitz when the last column fails or when
/// fallback is disabled.
HarvestResult harvest_from_window(const QuadraticProblem& problem, GradientWindow& window,
                                  const HarvestOptions& options);

/// Runs the method from x0.
SolveTrace run_lmsd(const QuadraticProblem& problem, const SolverConfig& config,
                    const linalg::Vector& x0);

/// Runs the method from initial_point(problem, config.stepsize_seed).
SolveTrace run_lmsd(const QuadraticProblem& problem, const SolverConfig& config);

/// Uniform draws from [1/lambda_max, 1/lambda_min].
std::vector<double> random_initial_stepsizes(const Spectrum& spectrum, std::size_t m,
                                             std::uint64_t seed);

}  // namespace lmsd
