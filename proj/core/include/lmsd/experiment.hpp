#pragma once

// Experiment harness: the five benchmark spectra, seeded sweeps over
// (problem, m, seed) with summary tables, figure tables of weights and
// contraction constants, and batch diagnostics over stored traces.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lmsd/diagnostics.hpp"
#include "lmsd/quadratic.hpp"
#include "lmsd/solver.hpp"

namespace lmsd::experiment {

/// Invalid command-line or experiment input (bad problem id, channel out of
/// range, mismatched trace/problem pair).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr int kFirstProblemId = 1;
inline constexpr int kLastProblemId = 5;
/// Problem id used for a user-supplied spectrum.
inline constexpr int kCustomProblemId = 0;

/// Spectrum of benchmark problem `id` (1..5) in dimension n:
///   1  n values evenly spaced in [1, 1.9]
///   2  n values evenly spaced in [1, 100]
///   3  five blocks, evenly spaced in [1,2], [25,26], [50,51], [75,76], [99,100]
///   4  n-1 values in [1, 2] and one eigenvalue 100
///   5  one eigenvalue 1 and n-1 values in [99, 100]
/// When n is not a multiple of five, the leading blocks of problem 3 get one
/// extra value each.
Spectrum benchmark_spectrum(int id, std::size_t n);

QuadraticProblem generate_benchmark_problem(int id, std::size_t n, std::uint64_t seed);

struct ExperimentSpec {
  std::vector<int> problems{1, 2, 3, 4, 5};
  /// Used for problem id 0.
  std::optional<std::vector<double>> custom_spectrum;
  std::size_t n = 100;
  std::vector<std::size_t> memory{1, 5};
  double epsilon = 1e-8;
  std::vector<std::uint64_t> seeds = default_seeds();
  TkRoute route = TkRoute::kQr;
  double rho = 1e8;
  std::filesystem::path output_dir;
  std::size_t jobs = 1;
  /// Also write the full JSON trace and problem document of every run.
  bool write_json = false;

  static std::vector<std::uint64_t> default_seeds();
  /// Throws UsageError.
  void validate() const;
};

/// Reads the JSON form of ExperimentSpec; absent fields keep their defaults.
ExperimentSpec spec_from_json(std::string_view text);
std::string spec_to_json(const ExperimentSpec& spec);

/// Parses "3", "1,4,9" or "1-20" (ranges inclusive, may be combined).
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

struct SummaryRow {
  int problem_id = 0;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  std::size_t outer_cycles = 0;
  std::size_t inner_iterations = 0;
  std::size_t gradient_evaluations = 0;
  double final_gradient_norm = 0.0;
  /// A SolveStatus name, or "solver-error" when the run aborted.
  std::string status;
};

struct RunOutcome {
  QuadraticProblem problem;
  SolveTrace trace;
  SummaryRow row;
};

QuadraticProblem suite_problem(const ExperimentSpec& spec, int problem_id, std::uint64_t seed);

/// One (problem, m, seed) run. The seed fixes the eigenvectors, the start
/// point and the initial stepsizes. A SolverError yields the partial trace
/// with status "solver-error".
RunOutcome run_one(const ExperimentSpec& spec, int problem_id, std::size_t m, std::uint64_t seed,
                   bool keep_history);

/// Runs every (problem, m, seed) combination in that nesting order. With an
/// output directory, writes one trace CSV per run (plus JSON documents when
/// requested), summary.csv and cells.csv.
std::vector<SummaryRow> run_suite(const ExperimentSpec& spec);

struct CellSummary {
  int problem_id = 0;
  std::size_t m = 0;
  std::size_t runs = 0;
  std::size_t converged = 0;
  double outer_min = 0, outer_median = 0, outer_max = 0;
  double inner_min = 0, inner_median = 0, inner_max = 0;
};

std::vector<CellSummary> summarize_cells(const std::vector<SummaryRow>& rows);
double median(std::vector<double> values);

std::string summary_csv(const std::vector<SummaryRow>& rows);
std::string cells_csv(const std::vector<CellSummary>& cells);

/// Base name shared by the files of one run, e.g. "p2_m5_s7".
std::string run_stem(int problem_id, std::size_t m, std::uint64_t seed);

struct WeightFigures {
  std::string cycle_starts;  ///< k,i,log10_abs_weight
  std::string all_iterations;  ///< k,j,i,log10_abs_weight
};

/// Channels 1, 2, 50 and 100 that exist in dimension n.
std::vector<std::size_t> default_channels(std::size_t n);

/// Requires a trace with history. Zero weights are written as "-inf".
/// Throws UsageError for a channel outside [1, n].
WeightFigures emit_weight_figures(const SolveTrace& trace, const QuadraticProblem& problem,
                                  const std::vector<std::size_t>& channels);

/// Rows i,Delta_i,below_one for every eigenvalue index.
std::string emit_constant_figures(const Spectrum& spectrum, std::size_t m);

struct DiagnosticsInput {
  std::filesystem::path trace;
  std::filesystem::path problem;
};

struct BatchDiagnostics {
  std::string report_json;
  bool passed = false;
};

/// Loads each pair, checks that the trace was produced for that problem
/// (UsageError otherwise) and runs every diagnostic. Malformed or truncated
/// documents raise ContractViolation.
BatchDiagnostics run_diagnostics(const std::vector<DiagnosticsInput>& inputs);

std::string read_text_file(const std::filesystem::path& path);
/// Writes through a temporary file in the same directory, then renames.
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace lmsd::experiment
