#pragma once

// Strongly convex quadratics f(x) = 1/2 x^T A x - b^T x with A = Q diag(lambda) Q^T
// held in factored form, so that the weights of any gradient along the
// eigenvectors of A are directly available.

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "lmsd/dense.hpp"

namespace lmsd {

/// Positive eigenvalues, stored nondecreasing. Construction sorts its input.
class Spectrum {
 public:
  explicit Spectrum(std::vector<double> eigenvalues);

  std::size_t size() const noexcept { return values_.size(); }
  /// Zero-based access: `at(0)` is the smallest eigenvalue.
  double at(std::size_t i) const noexcept { return values_[i]; }
  double smallest() const noexcept { return values_.front(); }
  double largest() const noexcept { return values_.back(); }
  const std::vector<double>& values() const noexcept { return values_; }
  /// Distinct values in increasing order (exact comparison).
  std::vector<double> distinct_values() const;

  friend bool operator==(const Spectrum&, const Spectrum&) = default;

 private:
  std::vector<double> values_;
};

/// Inclusive arithmetic progression of `count` values from `lo` to `hi`.
/// A single value is placed at `lo`.
std::vector<double> evenly_spaced(double lo, double hi, std::size_t count);

enum class BMode { kZeroMinimizer, kRandom };

std::string_view to_string(BMode mode);
BMode parse_b_mode(std::string_view text);

class QuadraticProblem {
 public:
  QuadraticProblem(Spectrum spectrum, linalg::Matrix q, linalg::Vector b, linalg::Vector x_star,
                   std::uint64_t seed, BMode b_mode);

  std::size_t dimension() const noexcept { return spectrum_.size(); }
  const Spectrum& spectrum() const noexcept { return spectrum_; }
  const linalg::Matrix& eigenvectors() const noexcept { return q_; }
  const linalg::Vector& b() const noexcept { return b_; }
  const linalg::Vector& minimizer() const noexcept { return x_star_; }
  std::uint64_t seed() const noexcept { return seed_; }
  BMode b_mode() const noexcept { return b_mode_; }

  /// A v evaluated as Q (Lambda (Q^T v)).
  linalg::Vector hessian_times(const linalg::Vector& v) const;
  /// A x - b.
  linalg::Vector gradient(const linalg::Vector& x) const;
  double objective(const linalg::Vector& x) const;
  /// d = Q^T g, the weights of g along the eigenvectors.
  linalg::Vector weights(const linalg::Vector& g) const;
  /// Explicit A; only for oracles and small problems.
  linalg::Matrix dense_hessian() const;

 private:
  Spectrum spectrum_;
  linalg::Matrix q_;
  linalg::Vector b_;
  linalg::Vector x_star_;
  std::uint64_t seed_;
  BMode b_mode_;
};

/// Q from random_orthogonal(n, seed). With BMode::kRandom the minimizer is a
/// seeded unit vector and b = A x_star; otherwise b = x_star = 0.
QuadraticProblem build_problem(const Spectrum& spectrum, std::uint64_t seed,
                               BMode b_mode = BMode::kZeroMinimizer);

/// Seeded start point with standard-normal direction and ||x - x_star|| = 1.
linalg::Vector initial_point(const QuadraticProblem& problem, std::uint64_t seed);

}  // namespace lmsd
