
#include "lmsd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace lmsd {
namespace {

constexpr std::uint64_t kStepsizeStream = 0x2545f4914f6cdd1dULL;

// Solves T R = M for T (R upper triangular), i.e. T = M R^{-1}.
linalg::Matrix right_divide_upper(const linalg::Matrix& m, const linalg::Matrix& r) {
  const std::size_t n = r.rows();
  for (std::size_t i = 0; i < n; ++i) {
    if (r(i, i) == 0.0) throw Singularity(i, "right division by singular triangular factor");
  }
  linalg::Matrix t(m.rows(), n);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t c = 0; c < n; ++c) {
      double s = m(i, c);
      for (std::size_t k = 0; k < c; ++k) s -= t(i, k) * r(k, c);
      t(i, c) = s / r(c, c);
    }
  }
  return t;
}

// [R v] J for an m x m R, length-m v and (m+1) x m J.
linalg::Matrix extended_times_panel(const linalg::Matrix& r, const linalg::Vector& v,
                                    const StepsizePanel& panel) {
  const std::size_t m = r.rows();
  if (panel.j.rows() != m + 1 || panel.j.cols() != m || v.size() != m) {
    throw ContractViolation("stepsize panel does not match the factor dimensions");
  }
  linalg::Matrix ext(m, m + 1);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < m; ++c) ext(i, c) = r(i, c);
    ext(i, m) = v[i];
  }
  return linalg::matmul(ext, panel.j);
}

// B^T [B v] as an m x (m+1) matrix.
linalg::Matrix gram_extended(const linalg::Matrix& b, const linalg::Vector& v) {
  const std::size_t m = b.cols();
  std::vector<linalg::Vector> cols;
  cols.reserve(m);
  for (std::size_t c = 0; c < m; ++c) cols.push_back(b.column(c));
  linalg::Matrix s(m, m + 1);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = i; c < m; ++c) {
      s(i, c) = linalg::dot(cols[i], cols[c]);
      s(c, i) = s(i, c);
    }
    s(i, m) = linalg::dot(cols[i], v);
  }
  return s;
}

}  // namespace

std::string_view to_string(TkRoute route) {
  switch (route) {
    case TkRoute::kDirect: return "direct";
    case TkRoute::kCholesky: return "cholesky";
    case TkRoute::kQr: return "qr";
  }
  return "?";
}

TkRoute parse_route(std::string_view text) {
  if (text == "direct") return TkRoute::kDirect;
  if (text == "cholesky") return TkRoute::kCholesky;
  if (text == "qr") return TkRoute::kQr;
  throw ContractViolation("unknown T route '" + std::string(text) + "'");
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kIterationCap: return "iteration-cap";
    case SolveStatus::kFiniteTermination: return "finite-termination";
  }
  return "?";
}

SolveStatus parse_status(std::string_view text) {
  if (text == "converged") return SolveStatus::kConverged;
  if (text == "iteration-cap") return SolveStatus::kIterationCap;
  if (text == "finite-termination") return SolveStatus::kFiniteTermination;
  throw ContractViolation("unknown status '" + std::string(text) + "'");
}

std::string_view to_string(FallbackReason reason) {
  switch (reason) {
    case FallbackReason::kRankDeficiency: return "rank-deficiency";
    case FallbackReason::kRhoBound: return "rho-bound";
    case FallbackReason::kDegenerateRitz: return "degenerate-ritz";
  }
  return "?";
}

FallbackReason parse_fallback_reason(std::string_view text) {
  if (text == "rank-deficiency") return FallbackReason::kRankDeficiency;
  if (text == "rho-bound") return FallbackReason::kRhoBound;
  if (text == "degenerate-ritz") return FallbackReason::kDegenerateRitz;
  throw ContractViolation("unknown fallback reason '" + std::string(text) + "'");
}

void SolverConfig::validate() const {
  if (m < 1) throw ContractViolation("SolverConfig: m must be at least 1");
  if (m > linalg::kMaxSmallEigenDimension) {
    throw ContractViolation("SolverConfig: m exceeds " +
                            std::to_string(linalg::kMaxSmallEigenDimension));
  }
  if (!(epsilon >= 0.0)) throw ContractViolation("SolverConfig: epsilon must be >= 0");
  if (!(rho >= 1.0)) throw ContractViolation("SolverConfig: rho must be >= 1");
  if (!initial_stepsizes.empty()) {
    if (initial_stepsizes.size() != m) {
      throw ContractViolation("SolverConfig: expected " + std::to_string(m) +
                              " initial stepsizes, got " +
                              std::to_string(initial_stepsizes.size()));
    }
    for (double a : initial_stepsizes) {
      if (!(a > 0.0) || !std::isfinite(a)) {
        throw ContractViolation("SolverConfig: initial stepsizes must be positive and finite");
      }
    }
  }
}

std::size_t SolveTrace::outer_cycles() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(cycles.begin(), cycles.end(), [](const CycleRecord& c) { return c.steps_taken > 0; }));
}

StepsizePanel StepsizePanel::from_stepsizes(std::span<const double> stepsizes) {
  const std::size_t m = stepsizes.size();
  if (m == 0) throw ContractViolation("StepsizePanel: no stepsizes");
  StepsizePanel panel{linalg::Matrix(m + 1, m)};
  for (std::size_t j = 0; j < m; ++j) {
    if (!(stepsizes[j] > 0.0)) throw ContractViolation("StepsizePanel: stepsizes must be positive");
    panel.j(j, j) = 1.0 / stepsizes[j];
    panel.j(j + 1, j) = -1.0 / stepsizes[j];
  }
  return panel;
}

linalg::Matrix build_gradient_matrix(std::span<const linalg::Vector> gradients) {
  return linalg::Matrix::from_columns(gradients);
}

linalg::Matrix form_t_direct(const QuadraticProblem& problem, const linalg::Matrix& q_k) {
  const std::size_t m = q_k.cols();
  linalg::Matrix aq(q_k.rows(), m);
  for (std::size_t c = 0; c < m; ++c) aq.set_column(c, problem.hessian_times(q_k.column(c)));
  return linalg::matmul(linalg::transpose(q_k), aq);
}

CholeskyProjection form_t_cholesky(const linalg::Matrix& g, const linalg::Vector& g_next,
                                   const StepsizePanel& panel) {
  const std::size_t n = g.rows();
  const std::size_t m = g.cols();
  if (g_next.size() != n) throw ContractViolation("form_t_cholesky: g_next length mismatch");
  const double gnorm = linalg::frobenius_norm(g);
  if (gnorm == 0.0) throw RankDeficiency(0, "form_t_cholesky: zero gradient matrix");

  // First pass on G^T G + shift I. The shift keeps the factorization defined
  // up to cond(G) ~ 1/u; two unshifted passes on the computed basis then
  // restore the accuracy a single Gram factorization loses (u cond(G)^2).
  const double u = std::numeric_limits<double>::epsilon() / 2.0;
  const double shift = 11.0 * static_cast<double>(m * n + m * (m + 1)) * u * gnorm * gnorm;
  linalg::Matrix s = gram_extended(g, g_next);
  for (std::size_t i = 0; i < m; ++i) s(i, i) += shift;
  linalg::ExtendedCholesky f = linalg::partially_extended_cholesky(s);
  linalg::Matrix r = f.r;
  linalg::Matrix basis = right_divide_upper(g, f.r);

  for (int pass = 0; pass < 2; ++pass) {
    f = linalg::partially_extended_cholesky(gram_extended(basis, g_next));
    r = linalg::matmul(f.r, r);
    if (pass == 0) basis = right_divide_upper(basis, f.r);
  }

  for (std::size_t j = 0; j < m; ++j) {
    if (!(r(j, j) >= linalg::kRankTolerance * gnorm)) {
      throw RankDeficiency(j, "form_t_cholesky: diagonal " + std::to_string(j) +
                                  " of R is below the rank tolerance");
    }
  }
  linalg::Matrix t = right_divide_upper(extended_times_panel(r, f.r_last, panel), r);
  return {std::move(t), std::move(r)};
}

linalg::Matrix form_t_qr(const linalg::Matrix& r, const linalg::Matrix& q_k,
                         const linalg::Vector& g_next, const StepsizePanel& panel) {
  const linalg::Vector qtg = linalg::transpose_matvec(q_k, g_next);
  return right_divide_upper(extended_times_panel(r, qtg, panel), r);
}

HarvestedStepsizes harvest_stepsizes(const linalg::Matrix& t, const Spectrum* bounds) {
  if (!t.all_finite()) throw DegenerateRitz("projected matrix has nonfinite entries");
  const linalg::SymmetricEigen eig = linalg::symmetric_eigenvalues_small(linalg::symmetrized(t));
  HarvestedStepsizes out;
  out.ritz_values.assign(eig.values.begin(), eig.values.end());
  out.ritz_vectors = eig.vectors;
  for (double theta : out.ritz_values) {
    if (!(theta > 0.0) || !std::isfinite(theta)) {
      throw DegenerateRitz("nonpositive or nonfinite Ritz value " + std::to_string(theta));
    }
    if (bounds != nullptr &&
        (theta < bounds->smallest() * (1.0 - 1e-8) || theta > bounds->largest() * (1.0 + 1e-8))) {
      throw ContractViolation("Ritz value " + std::to_string(theta) +
                              " lies outside the spectrum range");
    }
  }
  // Decreasing Ritz values give increasing stepsizes.
  out.stepsizes.reserve(out.ritz_values.size());
  for (double theta : out.ritz_values) out.stepsizes.push_back(1.0 / theta);
  return out;
}

void fallback_drop_column(GradientWindow& window) {
  if (window.size() <= 1) throw ContractViolation("fallback_drop_column: no column to spare");
  window.gradients.erase(window.gradients.begin());
  window.stepsizes.erase(window.stepsizes.begin());
  window.iterations.erase(window.iterations.begin());
}

HarvestResult harvest_from_window(const QuadraticProblem& problem, GradientWindow& window,
                                  const HarvestOptions& options) {
  if (window.size() == 0) throw ContractViolation("harvest_from_window: empty window");
  if (window.stepsizes.size() != window.size() || window.iterations.size() != window.size()) {
    throw ContractViolation("harvest_from_window: inconsistent window");
  }

  HarvestResult out;
  auto drop = [&](FallbackReason reason) {
    out.events.push_back({window.iterations.front(), window.size(), reason});
    fallback_drop_column(window);
  };

  while (true) {
    const std::size_t cols = window.size();
    const bool can_drop = options.fallback_enabled && cols > 1;
    try {
      const linalg::Matrix g = build_gradient_matrix(window.gradients);
      const StepsizePanel panel = StepsizePanel::from_stepsizes(window.stepsizes);
      linalg::Matrix t;
      linalg::Matrix r;
      switch (options.route) {
        case TkRoute::kCholesky: {
          CholeskyProjection proj = form_t_cholesky(g, window.next, panel);
          t = std::move(proj.t);
          r = std::move(proj.r);
          break;
        }
        case TkRoute::kQr: {
          linalg::ThinQr qr = linalg::thin_qr(g);
          t = form_t_qr(qr.r, qr.q, window.next, panel);
          r = std::move(qr.r);
          break;
        }
        case TkRoute::kDirect: {
          linalg::ThinQr qr = linalg::thin_qr(g);
          t = form_t_direct(problem, qr.q);
          r = std::move(qr.r);
          break;
        }
      }

      const double r_inv_norm = linalg::inverse_norm_upper_triangular(r);
      // A single column always satisfies the bound with rho = 1.
      if (can_drop && r_inv_norm > options.rho / linalg::norm2(window.gradients.front())) {
        drop(FallbackReason::kRhoBound);
        continue;
      }

      out.harvested = harvest_stepsizes(t);
      out.columns_used = cols;
      out.window_start = window.iterations.front();
      out.r_inv_norm = r_inv_norm;
      out.r_factor = std::move(r);
      return out;
    } catch (const RankDeficiency&) {
      if (!can_drop) throw;
      drop(FallbackReason::kRankDeficiency);
    } catch (const Singularity& e) {
      if (!can_drop) throw RankDeficiency(e.index(), e.what());
      drop(FallbackReason::kRankDeficiency);
    } catch (const DegenerateRitz&) {
      if (!can_drop) throw;
      drop(FallbackReason::kDegenerateRitz);
    }
  }
}

std::vector<double> random_initial_stepsizes(const Spectrum& spectrum, std::size_t m,
                                             std::uint64_t seed) {
  std::mt19937_64 engine(seed ^ kStepsizeStream);
  std::uniform_real_distribution<double> uniform(1.0 / spectrum.largest(), 1.0 / spectrum.smallest());
  std::vector<double> out(m);
  for (auto& a : out) a = uniform(engine);
  return out;
}

SolveTrace run_lmsd(const QuadraticProblem& problem, const SolverConfig& config,
                    const linalg::Vector& x0) {
  config.validate();
  const std::size_t n = problem.dimension();
  if (x0.size() != n) throw ContractViolation("run_lmsd: start point has wrong length");
  const std::size_t cap = config.max_total_iterations != 0 ? config.max_total_iterations : 100 * n;

  SolveTrace trace;
  trace.m = config.m;
  trace.route = config.route;
  if (config.keep_history) trace.history.emplace();

  std::vector<double> stepsizes = config.initial_stepsizes.empty()
                                      ? random_initial_stepsizes(problem.spectrum(), config.m,
                                                                 config.stepsize_seed)
                                      : config.initial_stepsizes;
  std::size_t stepsize_columns = 0;

  linalg::Vector x = x0;
  linalg::Vector g = problem.gradient(x);
  double gnorm = linalg::norm2(g);
  trace.gradient_evaluations = 1;
  if (trace.history) {
    trace.history->iterates.push_back(x);
    trace.history->gradients.push_back(g);
  }

  auto finish = [&](SolveStatus status) {
    trace.status = status;
    trace.final_x = x;
    trace.final_gradient_norm = gnorm;
    return trace;
  };
  auto stop_status = [](double norm) {
    return norm == 0.0 ? SolveStatus::kFiniteTermination : SolveStatus::kConverged;
  };

  if (gnorm <= config.epsilon) return finish(stop_status(gnorm));

  GradientWindow window;
  std::size_t t = 0;
  const HarvestOptions harvest_options{config.route, config.rho, config.fallback_enabled};

  for (std::size_t k = 1;; ++k) {
    CycleRecord& rec = trace.cycles.emplace_back();
    rec.k = k;
    rec.first_iteration = t;
    rec.stepsizes = stepsizes;
    rec.stepsize_columns = stepsize_columns;
    rec.gradient_norms.push_back(gnorm);

    for (double alpha : stepsizes) {
      if (t >= cap) return finish(SolveStatus::kIterationCap);
      window.gradients.push_back(g);
      window.stepsizes.push_back(alpha);
      window.iterations.push_back(t);
      if (window.size() > config.m) fallback_drop_column(window);

      linalg::axpy(-alpha, g, x);
      g = problem.gradient(x);
      gnorm = linalg::norm2(g);
      ++trace.gradient_evaluations;
      ++trace.total_inner_iterations;
      ++t;
      if (trace.history) {
        trace.history->stepsizes.push_back(alpha);
        trace.history->iterates.push_back(x);
        trace.history->gradients.push_back(g);
      }
      ++rec.steps_taken;
      rec.gradient_norms.push_back(gnorm);
      if (gnorm <= config.epsilon) return finish(stop_status(gnorm));
    }

    window.next = g;
    HarvestResult harvest;
    try {
      harvest = harvest_from_window(problem, window, harvest_options);
    } catch (const std::exception& e) {
      trace.status = SolveStatus::kIterationCap;
      trace.final_x = x;
      trace.final_gradient_norm = gnorm;
      throw SolverError(std::string("cycle ") + std::to_string(k) +
                            ": no usable projected matrix: " + e.what(),
                        std::move(trace));
    }
    rec.harvested = true;
    rec.ritz_values = harvest.harvested.ritz_values;
    rec.ritz_vectors = std::move(harvest.harvested.ritz_vectors);
    rec.columns_used = harvest.columns_used;
    rec.window_start = harvest.window_start;
    rec.r_inv_norm = harvest.r_inv_norm;
    rec.r_factor = std::move(harvest.r_factor);
    rec.fallback_events = std::move(harvest.events);

    stepsizes = std::move(harvest.harvested.stepsizes);
    stepsize_columns = harvest.columns_used;
  }
}

SolveTrace run_lmsd(const QuadraticProblem& problem, const SolverConfig& config) {
  return run_lmsd(problem, config, initial_point(problem, config.stepsize_seed));
}

}  // namespace lmsd
