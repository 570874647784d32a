#include "lmsd/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lmsd/errors.hpp"
#include "lmsd/io.hpp"

namespace lmsd::experiment {
namespace {

using nlohmann::json;

void append(std::vector<double>& out, const std::vector<double>& block) {
  out.insert(out.end(), block.begin(), block.end());
}

std::uint64_t parse_unsigned(std::string_view text) {
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end || text.empty()) {
    throw UsageError("invalid seed '" + std::string(text) + "'");
  }
  return value;
}

std::string log10_abs(double w) {
  if (w == 0.0) return "-inf";
  return io::format_real(std::log10(std::abs(w)));
}

}  // namespace

Spectrum benchmark_spectrum(int id, std::size_t n) {
  std::vector<double> v;
  switch (id) {
    case 1:
      if (n < 1) break;
      return Spectrum(evenly_spaced(1.0, 1.9, n));
    case 2:
      if (n < 1) break;
      return Spectrum(evenly_spaced(1.0, 100.0, n));
    case 3: {
      if (n < 5) break;
      const double lows[] = {1.0, 25.0, 50.0, 75.0, 99.0};
      for (std::size_t b = 0; b < 5; ++b) {
        const std::size_t count = n / 5 + (b < n % 5 ? 1 : 0);
        append(v, evenly_spaced(lows[b], lows[b] + 1.0, count));
      }
      return Spectrum(std::move(v));
    }
    case 4:
      if (n < 2) break;
      v = evenly_spaced(1.0, 2.0, n - 1);
      v.push_back(100.0);
      return Spectrum(std::move(v));
    case 5:
      if (n < 2) break;
      v.push_back(1.0);
      append(v, evenly_spaced(99.0, 100.0, n - 1));
      return Spectrum(std::move(v));
    default:
      throw UsageError("problem id must be in 1..5, got " + std::to_string(id));
  }
  throw UsageError("dimension " + std::to_string(n) + " is too small for problem " +
                   std::to_string(id));
}

QuadraticProblem generate_benchmark_problem(int id, std::size_t n, std::uint64_t seed) {
  return build_problem(benchmark_spectrum(id, n), seed);
}

std::vector<std::uint64_t> ExperimentSpec::default_seeds() {
  std::vector<std::uint64_t> seeds(20);
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = i + 1;
  return seeds;
}

void ExperimentSpec::validate() const {
  if (problems.empty()) throw UsageError("no problems selected");
  for (int id : problems) {
    if (id == kCustomProblemId) {
      if (!custom_spectrum || custom_spectrum->empty()) {
        throw UsageError("problem 0 needs a custom spectrum");
      }
    } else if (id < kFirstProblemId || id > kLastProblemId) {
      throw UsageError("problem id must be in 1..5, got " + std::to_string(id));
    }
  }
  if (memory.empty()) throw UsageError("no memory lengths selected");
  if (seeds.empty()) throw UsageError("seed list is empty");
  if (!(epsilon >= 0.0)) throw UsageError("epsilon must be nonnegative");
  if (!(rho >= 1.0)) throw UsageError("rho must be at least 1");
  if (jobs == 0) throw UsageError("jobs must be positive");
  const std::size_t max_m = *std::max_element(memory.begin(), memory.end());
  for (int id : problems) {
    const std::size_t dim = id == kCustomProblemId ? custom_spectrum->size() : n;
    if (dim < max_m) {
      throw UsageError("dimension " + std::to_string(dim) + " is smaller than m = " +
                       std::to_string(max_m));
    }
  }
  for (std::size_t m : memory) {
    if (m == 0) throw UsageError("memory length must be positive");
  }
}

ExperimentSpec spec_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::exception& e) {
    throw UsageError(std::string("experiment config: malformed JSON: ") + e.what());
  }
  ExperimentSpec s;
  try {
    s.problems = j.value("problems", s.problems);
    if (j.contains("custom_spectrum")) {
      s.custom_spectrum = j.at("custom_spectrum").get<std::vector<double>>();
    }
    s.n = j.value("n", s.n);
    s.memory = j.value("m", s.memory);
    s.epsilon = j.value("epsilon", s.epsilon);
    if (j.contains("seeds")) {
      const json& seeds = j.at("seeds");
      s.seeds = seeds.is_string() ? parse_seed_list(seeds.get<std::string>())
                                  : seeds.get<std::vector<std::uint64_t>>();
    }
    if (j.contains("tk_route")) s.route = parse_route(j.at("tk_route").get<std::string>());
    s.rho = j.value("rho", s.rho);
    if (j.contains("output_dir")) s.output_dir = j.at("output_dir").get<std::string>();
    s.jobs = j.value("jobs", s.jobs);
    s.write_json = j.value("write_json", s.write_json);
  } catch (const json::exception& e) {
    throw UsageError(std::string("experiment config: ") + e.what());
  } catch (const ContractViolation& e) {
    throw UsageError(std::string("experiment config: ") + e.what());
  }
  return s;
}

std::string spec_to_json(const ExperimentSpec& s) {
  json j = {{"problems", s.problems},
            {"n", s.n},
            {"m", s.memory},
            {"epsilon", s.epsilon},
            {"seeds", s.seeds},
            {"tk_route", std::string(to_string(s.route))},
            {"rho", s.rho},
            {"output_dir", s.output_dir.string()},
            {"jobs", s.jobs},
            {"write_json", s.write_json}};
  if (s.custom_spectrum) j["custom_spectrum"] = *s.custom_spectrum;
  return j.dump(2);
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string_view item = text.substr(pos, comma - pos);
    const std::size_t dash = item.find('-');
    if (dash == std::string_view::npos) {
      seeds.push_back(parse_unsigned(item));
    } else {
      const std::uint64_t lo = parse_unsigned(item.substr(0, dash));
      const std::uint64_t hi = parse_unsigned(item.substr(dash + 1));
      if (hi < lo) throw UsageError("descending seed range '" + std::string(item) + "'");
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    }
    pos = comma + 1;
  }
  return seeds;
}

QuadraticProblem suite_problem(const ExperimentSpec& spec, int problem_id, std::uint64_t seed) {
  if (problem_id == kCustomProblemId) {
    if (!spec.custom_spectrum) throw UsageError("problem 0 needs a custom spectrum");
    return build_problem(Spectrum(*spec.custom_spectrum), seed);
  }
  return generate_benchmark_problem(problem_id, spec.n, seed);
}

RunOutcome run_one(const ExperimentSpec& spec, int problem_id, std::size_t m, std::uint64_t seed,
                   bool keep_history) {
  QuadraticProblem problem = suite_problem(spec, problem_id, seed);
  SolverConfig config;
  config.m = m;
  config.epsilon = spec.epsilon;
  config.rho = spec.rho;
  config.route = spec.route;
  config.stepsize_seed = seed;
  config.keep_history = keep_history;

  SummaryRow row;
  row.problem_id = problem_id;
  row.m = m;
  row.seed = seed;
  SolveTrace trace;
  try {
    trace = run_lmsd(problem, config);
    row.status = std::string(to_string(trace.status));
  } catch (const SolverError& e) {
    trace = e.trace();
    row.status = "solver-error";
  }
  row.outer_cycles = trace.outer_cycles();
  row.inner_iterations = trace.total_inner_iterations;
  row.gradient_evaluations = trace.gradient_evaluations;
  row.final_gradient_norm = trace.final_gradient_norm;
  return RunOutcome{std::move(problem), std::move(trace), row};
}

std::vector<SummaryRow> run_suite(const ExperimentSpec& spec) {
  spec.validate();
  struct Job {
    int problem;
    std::size_t m;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (int p : spec.problems)
    for (std::size_t m : spec.memory)
      for (std::uint64_t s : spec.seeds) jobs.push_back({p, m, s});

  const bool writing = !spec.output_dir.empty();
  if (writing) std::filesystem::create_directories(spec.output_dir);

  std::vector<SummaryRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      RunOutcome out = run_one(spec, job.problem, job.m, job.seed, spec.write_json);
      if (writing) {
        const std::string stem = run_stem(job.problem, job.m, job.seed);
        write_text_file(spec.output_dir / (stem + "_trace.csv"), io::trace_to_csv(out.trace));
        if (spec.write_json) {
          write_text_file(spec.output_dir / (stem + "_trace.json"),
                          io::trace_to_json(out.trace, out.problem));
          write_text_file(spec.output_dir / (stem + "_problem.json"),
                          io::problem_to_json(out.problem));
        }
      }
      rows[i] = out.row;
    }
  };

  const std::size_t threads = std::min(spec.jobs, jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  if (writing) {
    write_text_file(spec.output_dir / "summary.csv", summary_csv(rows));
    write_text_file(spec.output_dir / "cells.csv", cells_csv(summarize_cells(rows)));
  }
  return rows;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ContractViolation("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<CellSummary> summarize_cells(const std::vector<SummaryRow>& rows) {
  std::map<std::pair<int, std::size_t>, std::vector<const SummaryRow*>> groups;
  for (const SummaryRow& r : rows) groups[{r.problem_id, r.m}].push_back(&r);

  std::vector<CellSummary> cells;
  for (const auto& [key, members] : groups) {
    CellSummary c;
    c.problem_id = key.first;
    c.m = key.second;
    c.runs = members.size();
    std::vector<double> outer, inner;
    for (const SummaryRow* r : members) {
      if (r->status == "converged" || r->status == "finite-termination") ++c.converged;
      outer.push_back(static_cast<double>(r->outer_cycles));
      inner.push_back(static_cast<double>(r->inner_iterations));
    }
    c.outer_min = *std::min_element(outer.begin(), outer.end());
    c.outer_max = *std::max_element(outer.begin(), outer.end());
    c.outer_median = median(outer);
    c.inner_min = *std::min_element(inner.begin(), inner.end());
    c.inner_max = *std::max_element(inner.begin(), inner.end());
    c.inner_median = median(inner);
    cells.push_back(c);
  }
  return cells;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << "problem,m,seed,outer_cycles,inner_iterations,gradient_evaluations,final_grad_norm,status\n";
  for (const SummaryRow& r : rows) {
    out << r.problem_id << ',' << r.m << ',' << r.seed << ',' << r.outer_cycles << ','
        << r.inner_iterations << ',' << r.gradient_evaluations << ','
        << io::format_real(r.final_gradient_norm) << ',' << r.status << '\n';
  }
  return out.str();
}

std::string cells_csv(const std::vector<CellSummary>& cells) {
  std::ostringstream out;
  out << "problem,m,runs,converged,outer_min,outer_median,outer_max,inner_min,inner_median,"
         "inner_max\n";
  for (const CellSummary& c : cells) {
    out << c.problem_id << ',' << c.m << ',' << c.runs << ',' << c.converged << ','
        << io::format_real(c.outer_min) << ',' << io::format_real(c.outer_median) << ','
        << io::format_real(c.outer_max) << ',' << io::format_real(c.inner_min) << ','
        << io::format_real(c.inner_median) << ',' << io::format_real(c.inner_max) << '\n';
  }
  return out.str();
}

std::string run_stem(int problem_id, std::size_t m, std::uint64_t seed) {
  return "p" + std::to_string(problem_id) + "_m" + std::to_string(m) + "_s" + std::to_string(seed);
}

std::vector<std::size_t> default_channels(std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t i : {1, 2, 50, 100}) {
    if (i <= n) out.push_back(i);
  }
  return out;
}

WeightFigures emit_weight_figures(const SolveTrace& trace, const QuadraticProblem& problem,
                                  const std::vector<std::size_t>& channels) {
  const std::size_t n = problem.dimension();
  for (std::size_t i : channels) {
    if (i < 1 || i > n) {
      throw UsageError("channel " + std::to_string(i) + " is outside 1.." + std::to_string(n));
    }
  }
  const diagnostics::WeightTrace weights = diagnostics::compute_weight_trace(trace, problem);

  std::ostringstream starts, all;
  starts << "k,i,log10_abs_weight\n";
  all << "k,j,i,log10_abs_weight\n";
  for (std::size_t c = 0; c < trace.cycles.size(); ++c) {
    const CycleRecord& rec = trace.cycles[c];
    const bool last = c + 1 == trace.cycles.size();
    const linalg::Vector& d0 = weights.weights.at(rec.first_iteration);
    for (std::size_t i : channels) starts << rec.k << ',' << i << ',' << log10_abs(d0[i - 1]) << '\n';
    const std::size_t rows = rec.steps_taken + (last ? 1 : 0);
    for (std::size_t j = 0; j < rows; ++j) {
      const linalg::Vector& d = weights.weights.at(rec.first_iteration + j);
      for (std::size_t i : channels) {
        all << rec.k << ',' << (j + 1) << ',' << i << ',' << log10_abs(d[i - 1]) << '\n';
      }
    }
  }
  return {starts.str(), all.str()};
}

std::string emit_constant_figures(const Spectrum& spectrum, std::size_t m) {
  if (m == 0 || m > spectrum.size()) {
    throw UsageError("memory length must be in 1..n");
  }
  const diagnostics::ContractionConstants c = diagnostics::compute_contraction_constants(spectrum, m);
  std::ostringstream out;
  out << "i,Delta_i,below_one\n";
  for (std::size_t i = 0; i < c.n; ++i) {
    out << (i + 1) << ',' << io::format_real(c.cycle_factors[i]) << ','
        << (c.cycle_factors[i] < 1.0 ? "true" : "false") << '\n';
  }
  return out.str();
}

BatchDiagnostics run_diagnostics(const std::vector<DiagnosticsInput>& inputs) {
  if (inputs.empty()) throw UsageError("no trace/problem pairs given");
  json runs = json::array();
  bool all_passed = true;
  for (const DiagnosticsInput& in : inputs) {
    const std::string trace_text = read_text_file(in.trace);
    const QuadraticProblem problem = io::problem_from_json(read_text_file(in.problem));
    const io::ProblemTag tag = io::trace_problem_tag(trace_text);
    if (!tag.matches(problem)) {
      throw UsageError("trace " + in.trace.string() + " was not produced for problem " +
                       in.problem.string());
    }
    const SolveTrace trace = io::trace_from_json(trace_text);
    const diagnostics::DiagnosticsReport report = diagnostics::run_all(trace, problem);
    all_passed = all_passed && report.passed;
    json entry = json::parse(io::diagnostics_to_json(report));
    entry["trace"] = in.trace.string();
    entry["problem"] = in.problem.string();
    runs.push_back(std::move(entry));
  }
  json out = {{"result", all_passed ? "PASS" : "FAIL"}, {"runs", std::move(runs)}};
  return {out.dump(2), all_passed};
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw UsageError("failed writing " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace lmsd::experiment
