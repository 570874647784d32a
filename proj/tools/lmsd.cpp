#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lmsd/diagnostics.hpp"
#include "lmsd/errors.hpp"
#include "lmsd/experiment.hpp"
#include "lmsd/io.hpp"
#include "lmsd/quadratic.hpp"
#include "lmsd/solver.hpp"

namespace fs = std::filesystem;
using namespace lmsd;
using experiment::UsageError;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitContract = 3;
constexpr int kExitSolver = 4;

struct ProblemArgs {
  int id = 1;
  std::size_t n = 100;
  std::uint64_t seed = 1;
  std::string file;
  std::string b_mode = "zero-minimizer";
};

void add_problem_options(CLI::App& app, ProblemArgs& args) {
  app.add_option("--problem", args.id, "Benchmark problem id (1-5)");
  app.add_option("--n", args.n, "Dimension");
  app.add_option("--seed,--seeds", args.seed, "Seed for eigenvectors, start point and stepsizes");
  app.add_option("--problem-file", args.file, "Problem JSON written by 'generate'");
}

QuadraticProblem load_problem(const ProblemArgs& args) {
  if (!args.file.empty()) return io::problem_from_json(experiment::read_text_file(args.file));
  return build_problem(experiment::benchmark_spectrum(args.id, args.n), args.seed,
                       parse_b_mode(args.b_mode));
}

void emit(const std::string& out, const std::string& content) {
  if (out.empty() || out == "-") {
    std::cout << content;
  } else {
    experiment::write_text_file(out, content);
  }
}

std::vector<std::size_t> parse_channels(const std::string& text) {
  std::vector<std::size_t> channels;
  for (std::uint64_t c : experiment::parse_seed_list(text)) channels.push_back(c);
  return channels;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Limited memory steepest descent experiments on convex quadratics"};
  app.require_subcommand(1);

  // generate
  ProblemArgs gen;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "Write a benchmark problem as JSON");
  add_problem_options(*generate, gen);
  generate->add_option("--b-mode", gen.b_mode, "zero-minimizer or random");
  generate->add_option("--out", gen_out, "Output file (stdout when omitted)");

  // solve
  ProblemArgs sol;
  SolverConfig sol_cfg;
  std::string sol_config_file, sol_route = "qr", sol_out;
  std::size_t sol_max_iter = 0;
  auto* solve = app.add_subcommand("solve", "Run the solver on one problem");
  add_problem_options(*solve, sol);
  solve->add_option("--config", sol_config_file, "Solver config JSON");
  auto* sol_m = solve->add_option("--m", sol_cfg.m, "Memory length");
  auto* sol_eps = solve->add_option("--epsilon", sol_cfg.epsilon, "Gradient-norm tolerance");
  auto* sol_route_opt = solve->add_option("--route", sol_route, "T route")
                            ->check(CLI::IsMember({"direct", "cholesky", "qr"}));
  auto* sol_rho = solve->add_option("--rho", sol_cfg.rho, "Conditioning guard for R^{-1}");
  auto* sol_cap = solve->add_option("--max-iterations", sol_max_iter, "Inner iteration cap");
  solve->add_option("--out", sol_out, "Output directory for trace and problem files");

  // suite
  std::string suite_config, suite_problems, suite_m, suite_seeds, suite_route, suite_out;
  experiment::ExperimentSpec cli_spec;
  bool suite_json = false;
  auto* suite = app.add_subcommand("suite", "Sweep problems, memory lengths and seeds");
  suite->add_option("--config", suite_config, "Experiment JSON");
  auto* st_problem = suite->add_option("--problem", suite_problems, "Problem ids, e.g. 1,2,5 or 1-5");
  auto* st_n = suite->add_option("--n", cli_spec.n, "Dimension");
  auto* st_m = suite->add_option("--m", suite_m, "Memory lengths, e.g. 1,5");
  auto* st_eps = suite->add_option("--epsilon", cli_spec.epsilon, "Gradient-norm tolerance");
  auto* st_seeds = suite->add_option("--seed,--seeds", suite_seeds, "Seeds, e.g. 1-20");
  auto* st_route = suite->add_option("--route", suite_route, "T route")
                       ->check(CLI::IsMember({"direct", "cholesky", "qr"}));
  auto* st_rho = suite->add_option("--rho", cli_spec.rho, "Conditioning guard");
  auto* st_out = suite->add_option("--out", suite_out, "Output directory");
  auto* st_jobs = suite->add_option("--jobs", cli_spec.jobs, "Parallel runs");
  auto* st_json = suite->add_flag("--json", suite_json, "Also write JSON traces and problems");

  // figures
  ProblemArgs fig;
  std::size_t fig_m = 1;
  std::string fig_trace, fig_channels, fig_out = ".";
  double fig_eps = 1e-8;
  auto* figures = app.add_subcommand("figures", "Write weight and contraction-constant tables");
  add_problem_options(*figures, fig);
  figures->add_option("--m", fig_m, "Memory length");
  figures->add_option("--epsilon", fig_eps, "Tolerance when the run is performed here");
  figures->add_option("--trace", fig_trace, "Trace JSON (the run is performed when omitted)");
  figures->add_option("--channels", fig_channels, "Weight channels, e.g. 1,2,50,100");
  figures->add_option("--out", fig_out, "Output directory");

  // diagnose
  std::vector<std::string> diag_traces, diag_problems;
  std::string diag_out;
  auto* diagnose = app.add_subcommand("diagnose", "Check stored traces against their problems");
  diagnose->add_option("--trace", diag_traces, "Trace JSON files")->required();
  diagnose->add_option("--problem-file", diag_problems, "Problem JSON files, paired with --trace")
      ->required();
  diagnose->add_option("--out", diag_out, "Report file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*generate) {
      emit(gen_out, io::problem_to_json(load_problem(gen)) + "\n");
      return 0;
    }

    if (*solve) {
      const QuadraticProblem problem = load_problem(sol);
      SolverConfig cfg;
      if (!sol_config_file.empty()) {
        cfg = io::config_from_json(experiment::read_text_file(sol_config_file));
      } else {
        cfg.stepsize_seed = sol.seed;
      }
      if (sol_m->count()) cfg.m = sol_cfg.m;
      if (sol_eps->count()) cfg.epsilon = sol_cfg.epsilon;
      if (sol_route_opt->count()) cfg.route = parse_route(sol_route);
      if (sol_rho->count()) cfg.rho = sol_cfg.rho;
      if (sol_cap->count()) cfg.max_total_iterations = sol_max_iter;
      if (cfg.m > problem.dimension()) throw UsageError("m exceeds the dimension");

      SolveTrace trace;
      int code = 0;
      try {
        trace = run_lmsd(problem, cfg);
      } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        trace = e.trace();
        code = kExitSolver;
      }
      if (!sol_out.empty()) {
        const fs::path dir = sol_out;
        experiment::write_text_file(dir / "problem.json", io::problem_to_json(problem) + "\n");
        experiment::write_text_file(dir / "trace.json", io::trace_to_json(trace, problem));
        experiment::write_text_file(dir / "trace.csv", io::trace_to_csv(trace));
      }
      std::cout << "status=" << to_string(trace.status) << " outer_cycles=" << trace.outer_cycles()
                << " inner_iterations=" << trace.total_inner_iterations
                << " final_grad_norm=" << io::format_real(trace.final_gradient_norm) << '\n';
      return code;
    }

    if (*suite) {
      experiment::ExperimentSpec spec;
      if (!suite_config.empty()) {
        spec = experiment::spec_from_json(experiment::read_text_file(suite_config));
      }
      if (st_problem->count()) {
        spec.problems.clear();
        for (std::uint64_t id : experiment::parse_seed_list(suite_problems)) {
          spec.problems.push_back(static_cast<int>(id));
        }
      }
      if (st_n->count()) spec.n = cli_spec.n;
      if (st_m->count()) {
        spec.memory.clear();
        for (std::uint64_t m : experiment::parse_seed_list(suite_m)) spec.memory.push_back(m);
      }
      if (st_eps->count()) spec.epsilon = cli_spec.epsilon;
      if (st_seeds->count()) spec.seeds = experiment::parse_seed_list(suite_seeds);
      if (st_route->count()) spec.route = parse_route(suite_route);
      if (st_rho->count()) spec.rho = cli_spec.rho;
      if (st_out->count()) spec.output_dir = suite_out;
      if (st_jobs->count()) spec.jobs = cli_spec.jobs;
      if (st_json->count()) spec.write_json = true;

      const auto rows = experiment::run_suite(spec);
      std::cout << experiment::cells_csv(experiment::summarize_cells(rows));
      return 0;
    }

    if (*figures) {
      const QuadraticProblem problem = load_problem(fig);
      const fs::path dir = fig_out;
      SolveTrace trace;
      if (!fig_trace.empty()) {
        const std::string text = experiment::read_text_file(fig_trace);
        if (!io::trace_problem_tag(text).matches(problem)) {
          throw UsageError("trace was not produced for the given problem");
        }
        trace = io::trace_from_json(text);
        fig_m = trace.m;
      } else {
        SolverConfig cfg;
        cfg.m = fig_m;
        cfg.epsilon = fig_eps;
        cfg.stepsize_seed = fig.seed;
        trace = run_lmsd(problem, cfg);
      }
      const auto channels = fig_channels.empty() ? experiment::default_channels(problem.dimension())
                                                 : parse_channels(fig_channels);
      const auto weights = experiment::emit_weight_figures(trace, problem, channels);
      const std::string m_tag = "m" + std::to_string(fig_m);
      experiment::write_text_file(dir / ("weights_cycle_starts_" + m_tag + ".csv"),
                                  weights.cycle_starts);
      experiment::write_text_file(dir / ("weights_all_" + m_tag + ".csv"), weights.all_iterations);
      experiment::write_text_file(dir / ("constants_" + m_tag + ".csv"),
                                  experiment::emit_constant_figures(problem.spectrum(), fig_m));
      std::cout << "wrote figure tables to " << dir.string() << '\n';
      return 0;
    }

    if (*diagnose) {
      if (diag_traces.size() != diag_problems.size()) {
        throw UsageError("--trace and --problem-file must be given the same number of times");
      }
      std::vector<experiment::DiagnosticsInput> inputs;
      for (std::size_t i = 0; i < diag_traces.size(); ++i) {
        inputs.push_back({diag_traces[i], diag_problems[i]});
      }
      const auto result = experiment::run_diagnostics(inputs);
      emit(diag_out, result.report_json + "\n");
      std::cerr << "diagnostics: " << (result.passed ? "PASS" : "FAIL") << '\n';
      return result.passed ? 0 : kExitCheckFailed;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << '\n';
    return kExitContract;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  }
  return 0;
}
