#include "lmsd/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lmsd/errors.hpp"

namespace lmsd::diagnostics {
namespace {

const IterationHistory& require_history(const SolveTrace& trace, const char* who) {
  if (!trace.history || trace.history->gradients.empty()) {
    throw ContractViolation(std::string(who) + ": trace has no iterate/gradient history");
  }
  const IterationHistory& h = *trace.history;
  if (h.stepsizes.size() + 1 != h.gradients.size()) {
    throw ContractViolation(std::string(who) + ": history is inconsistent");
  }
  return h;
}

// True when every stepsize of `cycle` is covered by the step-factor bounds of
// a memory-m cycle.
bool cycle_has_bounded_steps(const CycleRecord& cycle, std::size_t m, const Spectrum& spectrum) {
  if (cycle.stepsizes.size() != m) return false;
  if (cycle.stepsize_columns == m) return true;
  if (cycle.stepsize_columns == 0 && m == 1) {
    const double lo = (1.0 - kInterlacingSlack) / spectrum.largest();
    const double hi = (1.0 + kInterlacingSlack) / spectrum.smallest();
    return std::all_of(cycle.stepsizes.begin(), cycle.stepsizes.end(),
                       [&](double a) { return a >= lo && a <= hi; });
  }
  return false;
}

}  // namespace

ContractionConstants compute_contraction_constants(const Spectrum& spectrum, std::size_t m) {
  const std::size_t n = spectrum.size();
  if (m < 1 || m > n) throw ContractViolation("compute_contraction_constants: need 1 <= m <= n");

  ContractionConstants out;
  out.m = m;
  out.n = n;
  out.step_factors = linalg::Matrix(m, n);
  out.prefix_step_factors = linalg::Matrix(m, n);
  out.cycle_factors.assign(n, 1.0);

  for (std::size_t j = 1; j <= m; ++j) {
    const double lo = spectrum.at(m - j);  // lambda_{m+1-j}
    const double hi = spectrum.at(n - j);  // lambda_{n+1-j}
    double running_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double li = spectrum.at(i);
      const double delta = std::max(std::abs(1.0 - li / lo), std::abs(1.0 - li / hi));
      out.step_factors(j - 1, i) = delta;
      out.cycle_factors[i] *= delta;
      running_max = std::max(running_max, delta);
      out.prefix_step_factors(j - 1, i) = running_max;
    }
  }
  out.worst_cycle_factor = *std::max_element(out.cycle_factors.begin(), out.cycle_factors.end());
  return out;
}

ProofConstants compute_proof_constants(const Spectrum& spectrum, std::size_t m, std::size_t p,
                                       double epsilon_p, std::size_t k_p, double rho) {
  const std::size_t n = spectrum.size();
  if (p < 1 || p > n - 1) throw ContractViolation("compute_proof_constants: p must lie in [1, n-1]");
  if (k_p < 1) throw ContractViolation("compute_proof_constants: K_p must be at least 1");
  if (!(rho >= 1.0)) throw ContractViolation("compute_proof_constants: rho must be >= 1");
  const ContractionConstants cc = compute_contraction_constants(spectrum, m);

  ProofConstants out;
  out.p = p;
  out.epsilon_p = epsilon_p;
  out.k_p = k_p;
  out.rho = rho;

  double term = 1.0;
  double sum = 1.0;
  for (std::size_t j = 0; j + 1 < m; ++j) {
    const double dh = cc.prefix_step_factors(j, p - 1);
    term *= dh * dh;
    sum += term;
  }
  out.stacked_factor = sum;

  if (!(epsilon_p > 0.0 && epsilon_p < 1.0 / (2.0 * out.stacked_factor * rho))) {
    throw ContractViolation("compute_proof_constants: epsilon_p must lie in (0, 1/(2 * " +
                            std::to_string(out.stacked_factor) + " * rho))");
  }

  const double base = std::max(1.0 / 3.0, 1.0 - spectrum.at(p) / spectrum.largest());
  out.guaranteed_contraction = std::pow(base, static_cast<double>(m));

  const double next_factor = cc.cycle_factors[p];  // channel p+1
  const double argument = 2.0 * out.stacked_factor * rho * epsilon_p *
                          std::pow(next_factor, -static_cast<double>(k_p + 1));
  out.catch_up_quotient = std::log(argument) / std::log(out.guaranteed_contraction);
  if (std::isfinite(out.catch_up_quotient)) {
    out.catch_up_cycles = static_cast<long long>(std::ceil(out.catch_up_quotient));
  }
  return out;
}

WeightTrace compute_weight_trace(const SolveTrace& trace, const QuadraticProblem& problem) {
  const IterationHistory& h = require_history(trace, "compute_weight_trace");
  WeightTrace out;
  out.weights.reserve(h.gradients.size());
  for (const auto& g : h.gradients) out.weights.push_back(problem.weights(g));
  return out;
}

WeightRecursionReport verify_weight_recursion(const SolveTrace& trace,
                                              const QuadraticProblem& problem) {
  const IterationHistory& h = require_history(trace, "verify_weight_recursion");
  const WeightTrace w = compute_weight_trace(trace, problem);
  const Spectrum& spectrum = problem.spectrum();

  WeightRecursionReport out;
  for (const auto& g : h.gradients) out.max_gradient_norm = std::max(out.max_gradient_norm, linalg::norm2(g));
  for (std::size_t t = 0; t < h.stepsizes.size(); ++t) {
    const double alpha = h.stepsizes[t];
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
      const double predicted = (1.0 - alpha * spectrum.at(i)) * w.weights[t][i];
      out.max_residual = std::max(out.max_residual, std::abs(w.weights[t + 1][i] - predicted));
    }
    ++out.steps_checked;
  }
  out.passed = out.max_residual <= kRecursionTolerance * out.max_gradient_norm;
  return out;
}

InterlacingReport verify_interlacing(const SolveTrace& trace, const Spectrum& spectrum) {
  const std::size_t n = spectrum.size();
  InterlacingReport out;
  for (const CycleRecord& c : trace.cycles) {
    if (!c.harvested) continue;
    const std::size_t mt = c.ritz_values.size();
    for (std::size_t j = 1; j <= mt; ++j) {
      const double theta = c.ritz_values[j - 1];
      const double lower = spectrum.at(mt - j);
      const double upper = spectrum.at(n - j);
      ++out.values_checked;
      if (theta < lower * (1.0 - kInterlacingSlack) || theta > upper * (1.0 + kInterlacingSlack)) {
        out.violations.push_back({c.k, j, theta, lower, upper});
      }
    }
  }
  out.passed = out.violations.empty();
  return out;
}

RitzConsistency verify_ritz_identities(const SolveTrace& trace, const QuadraticProblem& problem) {
  const IterationHistory& h = require_history(trace, "verify_ritz_identities");
  const Spectrum& spectrum = problem.spectrum();
  const std::size_t n = spectrum.size();

  RitzConsistency out;
  for (const CycleRecord& c : trace.cycles) {
    if (!c.harvested) continue;
    if (!c.fallback_events.empty()) {
      out.skipped_cycles.push_back(c.k);
      continue;
    }
    const std::size_t mt = c.columns_used;
    if (c.window_start + mt > h.gradients.size()) {
      throw ContractViolation("verify_ritz_identities: cycle window exceeds the history");
    }
    linalg::Matrix d(n, mt);
    for (std::size_t col = 0; col < mt; ++col) {
      d.set_column(col, problem.weights(h.gradients[c.window_start + col]));
    }
    linalg::Matrix unit_r = c.r_factor;
    for (std::size_t col = 0; col < mt; ++col) {
      double norm = 0.0;
      for (std::size_t row = 0; row <= col; ++row) norm += unit_r(row, col) * unit_r(row, col);
      norm = std::sqrt(norm);
      for (std::size_t row = 0; row <= col; ++row) unit_r(row, col) /= norm;
    }
    // Unit columns give ||R|| <= sqrt(mt).
    const double condition =
        linalg::inverse_norm_upper_triangular(unit_r) * linalg::frobenius_norm(unit_r);
    for (std::size_t j = 0; j < mt; ++j) {
      const linalg::Vector cvec =
          linalg::matvec(d, linalg::solve_upper_triangular(c.r_factor, c.ritz_vectors.column(j)));
      double unit = 0.0;
      double rayleigh = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        unit += cvec[i] * cvec[i];
        rayleigh += spectrum.at(i) * cvec[i] * cvec[i];
      }
      RitzResidual r{c.k, j + 1, std::abs(unit - 1.0), std::abs(c.ritz_values[j] - rayleigh) / spectrum.largest(),
                     condition};
      out.max_unit_residual = std::max(out.max_unit_residual, r.unit_residual);
      out.max_value_residual = std::max(out.max_value_residual, r.value_residual);
      if (condition <= kRitzConditionLimit) {
        out.max_unit_residual_conditioned = std::max(out.max_unit_residual_conditioned, r.unit_residual);
        out.max_value_residual_conditioned =
            std::max(out.max_value_residual_conditioned, r.value_residual);
      } else {
        ++out.ill_conditioned_values;
      }
      out.residuals.push_back(r);
    }
  }
  out.passed = out.max_unit_residual <= kRitzTolerance && out.max_value_residual <= kRitzTolerance;
  return out;
}

ContractionReport verify_cycle_contraction(const SolveTrace& trace,
                                           const QuadraticProblem& problem,
                                           const ContractionConstants& constants) {
  const IterationHistory& h = require_history(trace, "verify_cycle_contraction");
  const Spectrum& spectrum = problem.spectrum();
  const std::size_t n = spectrum.size();
  const std::size_t m = trace.m;
  if (constants.m != m || constants.n != n) {
    throw ContractViolation("verify_cycle_contraction: constants computed for a different (m, n)");
  }
  const WeightTrace w = compute_weight_trace(trace, problem);

  ContractionReport out;
  for (std::size_t idx = 0; idx + 1 < trace.cycles.size(); ++idx) {
    const CycleRecord& cur = trace.cycles[idx];
    const CycleRecord& nxt = trace.cycles[idx + 1];

    // Channel one never grows while every stepsize is at most 1/lambda_1.
    {
      const std::size_t t0 = cur.first_iteration;
      const std::size_t t1 = nxt.first_iteration;
      const double slack = kInequalitySlack * linalg::norm2(h.gradients[t0]);
      const double before = std::abs(w.weights[t0][0]);
      const double after = std::abs(w.weights[t1][0]);
      if (after > before + slack) out.channel_one_violations.push_back({cur.k, 1, 1, after, before});
    }

    // Span (k,j) -> (k+1,j) uses steps j..m of cycle k and 1..j-1 of cycle k+1.
    const bool cur_ok = cycle_has_bounded_steps(cur, m, spectrum) && cur.steps_taken == m;
    const bool nxt_ok = cycle_has_bounded_steps(nxt, m, spectrum);
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t t0 = cur.first_iteration + (j - 1);
      const std::size_t t1 = nxt.first_iteration + (j - 1);
      if (t1 >= h.gradients.size()) break;
      if (!cur_ok || (j > 1 && !nxt_ok)) {
        ++out.spans_skipped;
        continue;
      }
      ++out.spans_checked;
      const double g0 = linalg::norm2(h.gradients[t0]);
      const double g1 = linalg::norm2(h.gradients[t1]);
      const double slack = kInequalitySlack * g0;
      for (std::size_t i = 0; i < n; ++i) {
        const double bound = constants.cycle_factors[i] * std::abs(w.weights[t0][i]);
        const double observed = std::abs(w.weights[t1][i]);
        if (observed > bound + slack) out.component_violations.push_back({cur.k, j, i + 1, observed, bound});
      }
      const double gbound = constants.worst_cycle_factor * g0;
      if (g1 > gbound + slack) out.gradient_violations.push_back({cur.k, j, 0, g1, gbound});
    }
  }
  out.passed = out.component_violations.empty() && out.gradient_violations.empty() &&
               out.channel_one_violations.empty();
  return out;
}

std::vector<double> cycle_start_norms(const SolveTrace& trace) {
  std::vector<double> out;
  for (const CycleRecord& c : trace.cycles) out.push_back(c.gradient_norms.front());
  if (trace.cycles.empty()) {
    out.push_back(trace.final_gradient_norm);
    return out;
  }
  const CycleRecord& last = trace.cycles.back();
  const bool stopped_on_tolerance = trace.status != SolveStatus::kIterationCap;
  const bool ended_on_boundary = !last.harvested && last.steps_taken == last.stepsizes.size();
  if (last.steps_taken > 0 && (stopped_on_tolerance || ended_on_boundary)) {
    out.push_back(last.gradient_norms.back());
  }
  return out;
}

HalfLifeReport empirical_half_life(const SolveTrace& trace) {
  const std::vector<double> norms = cycle_start_norms(trace);
  const std::size_t count = norms.size();
  if (count < 2) throw ContractViolation("empirical_half_life: need at least two cycle starts");

  HalfLifeReport out;
  out.cycle_starts = count;
  for (std::size_t k = 0; k + 1 < count; ++k) {
    if (norms[k] > 0.0) out.measured_cycle_factor = std::max(out.measured_cycle_factor, norms[k + 1] / norms[k]);
  }
  for (std::size_t span = 1; span < count && !out.half_life; ++span) {
    bool ok = true;
    for (std::size_t k = 0; k + span < count && ok; ++k) ok = norms[k + span] <= 0.5 * norms[k];
    if (ok) out.half_life = span;
  }
  if (!out.half_life) return out;

  const double kobs = static_cast<double>(*out.half_life);
  out.c1 = 2.0 * std::pow(std::max(1.0, out.measured_cycle_factor), kobs - 1.0);
  out.c2 = std::pow(2.0, -1.0 / kobs);
  out.envelope_holds = true;
  for (std::size_t k = 0; k < count; ++k) {
    const double envelope = out.c1 * std::pow(out.c2, static_cast<double>(k + 1)) * norms[0];
    if (norms[k] > envelope + kInequalitySlack * norms[k]) out.envelope_holds = false;
  }
  out.passed = out.envelope_holds;
  return out;
}

DiagnosticsReport run_all(const SolveTrace& trace, const QuadraticProblem& problem) {
  DiagnosticsReport out;
  out.constants = compute_contraction_constants(problem.spectrum(), trace.m);
  out.weight_recursion = verify_weight_recursion(trace, problem);
  out.interlacing = verify_interlacing(trace, problem.spectrum());
  out.ritz = verify_ritz_identities(trace, problem);
  out.contraction = verify_cycle_contraction(trace, problem, out.constants);
  if (cycle_start_norms(trace).size() >= 2) out.half_life = empirical_half_life(trace);
  out.passed = out.weight_recursion.passed && out.interlacing.passed && out.ritz.passed &&
               out.contraction.passed && (!out.half_life || out.half_life->passed);
  return out;
}

}  // namespace lmsd::diagnostics
