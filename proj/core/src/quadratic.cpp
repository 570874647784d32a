#include "lmsd/quadratic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "lmsd/errors.hpp"

namespace lmsd {
namespace {

// Independent streams for the pieces derived from one problem seed.
constexpr std::uint64_t kMinimizerStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kStartStream = 0xc2b2ae3d27d4eb4fULL;

linalg::Vector normal_unit_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  linalg::Vector v(n);
  for (auto& x : v) x = normal(engine);
  const double nrm = linalg::norm2(v);
  for (auto& x : v) x /= nrm;
  return v;
}

}  // namespace

Spectrum::Spectrum(std::vector<double> eigenvalues) : values_(std::move(eigenvalues)) {
  if (values_.empty()) throw ContractViolation("Spectrum: no eigenvalues");
  for (double v : values_) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ContractViolation("Spectrum: eigenvalues must be finite and strictly positive");
    }
  }
  std::sort(values_.begin(), values_.end());
}

std::vector<double> Spectrum::distinct_values() const {
  std::vector<double> out = values_;
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<double> evenly_spaced(double lo, double hi, std::size_t count) {
  if (count == 0) return {};
  if (count == 1) return {lo};
  std::vector<double> out(count);
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

std::string_view to_string(BMode mode) {
  return mode == BMode::kZeroMinimizer ? "zero-minimizer" : "random";
}

BMode parse_b_mode(std::string_view text) {
  if (text == "zero-minimizer") return BMode::kZeroMinimizer;
  if (text == "random") return BMode::kRandom;
  throw ContractViolation("unknown b_mode '" + std::string(text) + "'");
}

QuadraticProblem::QuadraticProblem(Spectrum spectrum, linalg::Matrix q, linalg::Vector b,
                                   linalg::Vector x_star, std::uint64_t seed, BMode b_mode)
    : spectrum_(std::move(spectrum)),
      q_(std::move(q)),
      b_(std::move(b)),
      x_star_(std::move(x_star)),
      seed_(seed),
      b_mode_(b_mode) {
  const std::size_t n = spectrum_.size();
  if (q_.rows() != n || q_.cols() != n || b_.size() != n || x_star_.size() != n) {
    throw ContractViolation("QuadraticProblem: component dimensions disagree");
  }
}

linalg::Vector QuadraticProblem::hessian_times(const linalg::Vector& v) const {
  linalg::Vector w = linalg::transpose_matvec(q_, v);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= spectrum_.at(i);
  return linalg::matvec(q_, w);
}

linalg::Vector QuadraticProblem::gradient(const linalg::Vector& x) const {
  if (x.size() != dimension()) {
    throw ContractViolation("gradient: point has length " + std::to_string(x.size()) +
                            ", problem dimension is " + std::to_string(dimension()));
  }
  linalg::Vector g = hessian_times(x);
  if (b_mode_ != BMode::kZeroMinimizer) {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= b_[i];
  }
  return g;
}

double QuadraticProblem::objective(const linalg::Vector& x) const {
  return 0.5 * linalg::dot(x, hessian_times(x)) - linalg::dot(b_, x);
}

linalg::Vector QuadraticProblem::weights(const linalg::Vector& g) const {
  if (g.size() != dimension()) throw ContractViolation("weights: length mismatch");
  return linalg::transpose_matvec(q_, g);
}

linalg::Matrix QuadraticProblem::dense_hessian() const {
  const std::size_t n = dimension();
  linalg::Matrix a(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = r; c < n; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += q_(r, i) * spectrum_.at(i) * q_(c, i);
      a(r, c) = s;
      a(c, r) = s;
    }
  }
  return a;
}

QuadraticProblem build_problem(const Spectrum& spectrum, std::uint64_t seed, BMode b_mode) {
  const std::size_t n = spectrum.size();
  linalg::Matrix q = linalg::random_orthogonal(n, seed);
  linalg::Vector x_star(n);
  linalg::Vector b(n);
  if (b_mode == BMode::kRandom) {
    x_star = normal_unit_vector(n, seed ^ kMinimizerStream);
    linalg::Vector w = linalg::transpose_matvec(q, x_star);
    for (std::size_t i = 0; i < n; ++i) w[i] *= spectrum.at(i);
    b = linalg::matvec(q, w);
  }
  return QuadraticProblem(spectrum, std::move(q), std::move(b), std::move(x_star), seed, b_mode);
}

linalg::Vector initial_point(const QuadraticProblem& problem, std::uint64_t seed) {
  linalg::Vector x = normal_unit_vector(problem.dimension(), seed ^ kStartStream);
  linalg::axpy(1.0, problem.minimizer(), x);
  return x;
}

}  // namespace lmsd
