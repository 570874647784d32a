#include "lmsd/io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "lmsd/errors.hpp"

namespace lmsd::io {
namespace {

using nlohmann::json;

json parse(std::string_view text, const char* what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw ContractViolation(std::string(what) + ": malformed JSON: " + e.what());
  }
}

template <typename F>
auto guarded(const char* what, F&& body) {
  try {
    return body();
  } catch (const json::exception& e) {
    throw ContractViolation(std::string(what) + ": " + e.what());
  }
}

json matrix_to_json(const linalg::Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()},
          {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

linalg::Matrix matrix_from_json(const json& j) {
  const std::size_t rows = j.at("rows").get<std::size_t>();
  const std::size_t cols = j.at("cols").get<std::size_t>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != rows * cols) throw ContractViolation("matrix entry count does not match shape");
  linalg::Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = data[r * cols + c];
  return m;
}

json vectors_to_json(const std::vector<linalg::Vector>& vs) {
  json out = json::array();
  for (const auto& v : vs) out.push_back(v.values());
  return out;
}

std::vector<linalg::Vector> vectors_from_json(const json& j) {
  std::vector<linalg::Vector> out;
  for (const auto& row : j) out.emplace_back(row.get<std::vector<double>>());
  return out;
}

json problem_descriptor(const QuadraticProblem& problem) {
  return {{"n", problem.dimension()},
          {"seed", problem.seed()},
          {"eigenvalues", problem.spectrum().values()},
          {"b_mode", std::string(to_string(problem.b_mode()))}};
}

std::string join_reals(const std::vector<double>& values, char sep) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += sep;
    out += format_real(values[i]);
  }
  return out;
}

}  // namespace

std::string format_real(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string problem_to_json(const QuadraticProblem& problem) {
  return problem_descriptor(problem).dump(2);
}

QuadraticProblem problem_from_json(std::string_view text) {
  const json j = parse(text, "problem");
  return guarded("problem", [&] {
    const auto eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    const std::size_t n = j.at("n").get<std::size_t>();
    if (eigenvalues.size() != n) {
      throw ContractViolation("problem: n = " + std::to_string(n) + " but " +
                              std::to_string(eigenvalues.size()) + " eigenvalues given");
    }
    const BMode mode = parse_b_mode(j.value("b_mode", std::string("zero-minimizer")));
    return build_problem(Spectrum(eigenvalues), j.at("seed").get<std::uint64_t>(), mode);
  });
}

std::string config_to_json(const SolverConfig& c) {
  json j = {{"m", c.m},
            {"epsilon", c.epsilon},
            {"rho", c.rho},
            {"tk_route", std::string(to_string(c.route))},
            {"stepsize_seed", c.stepsize_seed},
            {"max_total_iterations", c.max_total_iterations},
            {"fallback_enabled", c.fallback_enabled},
            {"keep_history", c.keep_history}};
  if (!c.initial_stepsizes.empty()) j["initial_stepsizes"] = c.initial_stepsizes;
  return j.dump(2);
}

SolverConfig config_from_json(std::string_view text) {
  const json j = parse(text, "solver config");
  SolverConfig c = guarded("solver config", [&] {
    SolverConfig out;
    out.m = j.value("m", out.m);
    out.epsilon = j.value("epsilon", out.epsilon);
    out.rho = j.value("rho", out.rho);
    out.route = parse_route(j.value("tk_route", std::string(to_string(out.route))));
    out.initial_stepsizes = j.value("initial_stepsizes", out.initial_stepsizes);
    out.stepsize_seed = j.value("stepsize_seed", out.stepsize_seed);
    out.max_total_iterations = j.value("max_total_iterations", out.max_total_iterations);
    out.fallback_enabled = j.value("fallback_enabled", out.fallback_enabled);
    out.keep_history = j.value("keep_history", out.keep_history);
    return out;
  });
  c.validate();
  return c;
}

std::string trace_to_json(const SolveTrace& trace, const QuadraticProblem& problem) {
  json cycles = json::array();
  for (const CycleRecord& c : trace.cycles) {
    json events = json::array();
    for (const FallbackEvent& e : c.fallback_events) {
      events.push_back({{"dropped_iteration", e.dropped_iteration},
                        {"columns_before", e.columns_before},
                        {"reason", std::string(to_string(e.reason))}});
    }
    json rec = {{"k", c.k},
                {"first_iteration", c.first_iteration},
                {"stepsizes", c.stepsizes},
                {"stepsize_columns", c.stepsize_columns},
                {"steps_taken", c.steps_taken},
                {"gradient_norms", c.gradient_norms},
                {"harvested", c.harvested}};
    if (c.harvested) {
      rec["ritz_values"] = c.ritz_values;
      rec["columns_used"] = c.columns_used;
      rec["window_start"] = c.window_start;
      rec["r_inv_norm"] = c.r_inv_norm;
      rec["r_factor"] = matrix_to_json(c.r_factor);
      rec["ritz_vectors"] = matrix_to_json(c.ritz_vectors);
      rec["fallback_events"] = events;
    }
    cycles.push_back(std::move(rec));
  }
  json j = {{"problem", problem_descriptor(problem)},
            {"status", std::string(to_string(trace.status))},
            {"m", trace.m},
            {"tk_route", std::string(to_string(trace.route))},
            {"final_x", trace.final_x.values()},
            {"final_gradient_norm", trace.final_gradient_norm},
            {"total_inner_iterations", trace.total_inner_iterations},
            {"gradient_evaluations", trace.gradient_evaluations},
            {"cycles", std::move(cycles)}};
  if (trace.history) {
    j["history"] = {{"iterates", vectors_to_json(trace.history->iterates)},
                    {"gradients", vectors_to_json(trace.history->gradients)},
                    {"stepsizes", trace.history->stepsizes}};
  }
  return j.dump();
}

SolveTrace trace_from_json(std::string_view text) {
  const json j = parse(text, "trace");
  return guarded("trace", [&] {
    SolveTrace t;
    t.status = parse_status(j.at("status").get<std::string>());
    t.m = j.at("m").get<std::size_t>();
    t.route = parse_route(j.at("tk_route").get<std::string>());
    t.final_x = linalg::Vector(j.at("final_x").get<std::vector<double>>());
    t.final_gradient_norm = j.at("final_gradient_norm").get<double>();
    t.total_inner_iterations = j.at("total_inner_iterations").get<std::size_t>();
    t.gradient_evaluations = j.at("gradient_evaluations").get<std::size_t>();
    for (const json& rec : j.at("cycles")) {
      CycleRecord c;
      c.k = rec.at("k").get<std::size_t>();
      c.first_iteration = rec.at("first_iteration").get<std::size_t>();
      c.stepsizes = rec.at("stepsizes").get<std::vector<double>>();
      c.stepsize_columns = rec.at("stepsize_columns").get<std::size_t>();
      c.steps_taken = rec.at("steps_taken").get<std::size_t>();
      c.gradient_norms = rec.at("gradient_norms").get<std::vector<double>>();
      c.harvested = rec.at("harvested").get<bool>();
      if (c.gradient_norms.size() != c.steps_taken + 1) {
        throw ContractViolation("trace: cycle " + std::to_string(c.k) + " gradient norms are incomplete");
      }
      if (c.harvested) {
        c.ritz_values = rec.at("ritz_values").get<std::vector<double>>();
        c.columns_used = rec.at("columns_used").get<std::size_t>();
        c.window_start = rec.at("window_start").get<std::size_t>();
        c.r_inv_norm = rec.at("r_inv_norm").get<double>();
        c.r_factor = matrix_from_json(rec.at("r_factor"));
        c.ritz_vectors = matrix_from_json(rec.at("ritz_vectors"));
        for (const json& e : rec.at("fallback_events")) {
          c.fallback_events.push_back({e.at("dropped_iteration").get<std::size_t>(),
                                       e.at("columns_before").get<std::size_t>(),
                                       parse_fallback_reason(e.at("reason").get<std::string>())});
        }
      }
      t.cycles.push_back(std::move(c));
    }
    if (j.contains("history")) {
      const json& h = j.at("history");
      IterationHistory hist;
      hist.iterates = vectors_from_json(h.at("iterates"));
      hist.gradients = vectors_from_json(h.at("gradients"));
      hist.stepsizes = h.at("stepsizes").get<std::vector<double>>();
      if (hist.gradients.size() != hist.stepsizes.size() + 1 ||
          hist.iterates.size() != hist.gradients.size() ||
          hist.stepsizes.size() != t.total_inner_iterations) {
        throw ContractViolation("trace: iteration history is truncated or inconsistent");
      }
      t.history = std::move(hist);
    }
    return t;
  });
}

bool ProblemTag::matches(const QuadraticProblem& problem) const {
  return n == problem.dimension() && seed == problem.seed() && b_mode == problem.b_mode() &&
         eigenvalues == problem.spectrum().values();
}

ProblemTag trace_problem_tag(std::string_view trace_json) {
  const json j = parse(trace_json, "trace");
  return guarded("trace", [&] {
    const json& p = j.at("problem");
    ProblemTag tag;
    tag.n = p.at("n").get<std::size_t>();
    tag.seed = p.at("seed").get<std::uint64_t>();
    tag.b_mode = parse_b_mode(p.at("b_mode").get<std::string>());
    tag.eigenvalues = p.at("eigenvalues").get<std::vector<double>>();
    return tag;
  });
}

std::string trace_to_csv(const SolveTrace& trace) {
  std::ostringstream out;
  out << "k,j,grad_norm,alpha,thetas\n";
  for (const CycleRecord& c : trace.cycles) {
    const std::string thetas = c.harvested ? join_reals(c.ritz_values, ';') : std::string();
    for (std::size_t j = 0; j < c.steps_taken; ++j) {
      out << c.k << ',' << (j + 1) << ',' << format_real(c.gradient_norms[j]) << ','
          << format_real(c.stepsizes[j]) << ',' << thetas << '\n';
    }
  }
  // Terminal gradient: the first point of the cycle that was not completed.
  if (!trace.cycles.empty()) {
    const CycleRecord& last = trace.cycles.back();
    out << last.k << ',' << (last.steps_taken + 1) << ',' << format_real(last.gradient_norms.back())
        << ",,\n";
  } else {
    out << "1,1," << format_real(trace.final_gradient_norm) << ",,\n";
  }
  return out.str();
}

std::string diagnostics_to_json(const diagnostics::DiagnosticsReport& r) {
  auto verdict = [](bool ok) { return ok ? "PASS" : "FAIL"; };

  json interlacing_violations = json::array();
  for (const auto& v : r.interlacing.violations) {
    interlacing_violations.push_back(
        {{"k", v.k}, {"j", v.j}, {"theta", v.theta}, {"lower", v.lower}, {"upper", v.upper}});
  }
  auto contraction_list = [](const std::vector<diagnostics::ContractionViolation>& vs) {
    json out = json::array();
    for (const auto& v : vs) {
      out.push_back({{"k", v.k}, {"j", v.j}, {"i", v.i}, {"observed", v.observed}, {"bound", v.bound}});
    }
    return out;
  };

  json j;
  j["result"] = verdict(r.passed);
  j["weight_recursion"] = {{"result", verdict(r.weight_recursion.passed)},
                           {"max_residual", r.weight_recursion.max_residual},
                           {"max_gradient_norm", r.weight_recursion.max_gradient_norm},
                           {"steps_checked", r.weight_recursion.steps_checked}};
  j["interlacing"] = {{"result", verdict(r.interlacing.passed)},
                      {"values_checked", r.interlacing.values_checked},
                      {"violations", interlacing_violations}};
  j["ritz_identities"] = {{"result", verdict(r.ritz.passed)},
                          {"max_unit_residual", r.ritz.max_unit_residual},
                          {"max_value_residual", r.ritz.max_value_residual},
                          {"values_checked", r.ritz.residuals.size()},
                          {"ill_conditioned_values", r.ritz.ill_conditioned_values},
                          {"max_unit_residual_conditioned", r.ritz.max_unit_residual_conditioned},
                          {"max_value_residual_conditioned", r.ritz.max_value_residual_conditioned},
                          {"skipped_cycles", r.ritz.skipped_cycles}};
  j["cycle_contraction"] = {{"result", verdict(r.contraction.passed)},
                            {"spans_checked", r.contraction.spans_checked},
                            {"spans_skipped", r.contraction.spans_skipped},
                            {"component_violations", contraction_list(r.contraction.component_violations)},
                            {"gradient_violations", contraction_list(r.contraction.gradient_violations)},
                            {"channel_one_violations",
                             contraction_list(r.contraction.channel_one_violations)}};
  if (r.half_life) {
    const auto& h = *r.half_life;
    j["half_life"] = {{"result", verdict(h.passed)},
                      {"half_life", h.half_life ? json(*h.half_life) : json(nullptr)},
                      {"measured_cycle_factor", h.measured_cycle_factor},
                      {"c1", h.c1},
                      {"c2", h.c2},
                      {"envelope_holds", h.envelope_holds},
                      {"cycle_starts", h.cycle_starts}};
  } else {
    j["half_life"] = {{"result", "SKIPPED"}};
  }
  j["constants"] = {{"m", r.constants.m},
                    {"worst_cycle_factor", r.constants.worst_cycle_factor},
                    {"cycle_factors", r.constants.cycle_factors}};
  return j.dump(2);
}

std::string step_factors_csv(const diagnostics::ContractionConstants& c) {
  std::ostringstream out;
  out << "j,i,delta\n";
  for (std::size_t j = 0; j < c.m; ++j)
    for (std::size_t i = 0; i < c.n; ++i)
      out << (j + 1) << ',' << (i + 1) << ',' << format_real(c.step_factors(j, i)) << '\n';
  return out.str();
}

}  // namespace lmsd::io
