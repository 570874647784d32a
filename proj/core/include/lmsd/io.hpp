#pragma once

// Text formats: JSON documents for problems, solver configs, traces and
// diagnostic reports; CSV (UTF-8, comma separated, header row) for traces and
// figure tables. Reals are written in shortest round-trip form.

#include <string>
#include <string_view>

#include "lmsd/diagnostics.hpp"
#include "lmsd/quadratic.hpp"
#include "lmsd/solver.hpp"

namespace lmsd::io {

/// Shortest decimal form that parses back to the same double; infinities
/// are written "inf" / "-inf".
std::string format_real(double value);

/// {n, seed, eigenvalues[], b_mode}; eigenvectors are regenerated from seed.
std::string problem_to_json(const QuadraticProblem& problem);
QuadraticProblem problem_from_json(std::string_view text);

std::string config_to_json(const SolverConfig& config);
/// Missing fields keep their defaults. Throws ContractViolation on bad input.
SolverConfig config_from_json(std::string_view text);

/// Full trace including cycle records and (if kept) the iteration history.
/// The problem descriptor is embedded so a trace can be matched to its problem.
std::string trace_to_json(const SolveTrace& trace, const QuadraticProblem& problem);
SolveTrace trace_from_json(std::string_view text);

/// Problem descriptor embedded in a trace document.
struct ProblemTag {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  BMode b_mode = BMode::kZeroMinimizer;
  std::vector<double> eigenvalues;

  bool matches(const QuadraticProblem& problem) const;
};
ProblemTag trace_problem_tag(std::string_view trace_json);

/// One row per inner step: k,j,grad_norm,alpha,thetas. `thetas` lists the
/// Ritz values harvested at the end of cycle k separated by ';'. A final row
/// with an empty alpha records the last gradient.
std::string trace_to_csv(const SolveTrace& trace);

std::string diagnostics_to_json(const diagnostics::DiagnosticsReport& report);

/// Rows (j, i, delta_ji) for the step factors.
std::string step_factors_csv(const diagnostics::ContractionConstants& constants);

}  // namespace lmsd::io
