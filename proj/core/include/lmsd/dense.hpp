#pragma once

// Small dense linear-algebra kernels used by the LMSD solver and its
// diagnostics. Sized for n up to a few thousand and memory lengths m <= 64.
// Every function here is a pure function of its arguments.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace lmsd::linalg {

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t length, double fill = 0.0) : data_(length, fill) {}
  Vector(std::initializer_list<double> values) : data_(values) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool all_finite() const noexcept;

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> data_;
};

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  /// Builds a matrix from nested row lists; all rows must have equal length.
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);
  /// Stacks the given vectors as columns. All must share one length.
  static Matrix from_columns(std::span<const Vector> columns);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  Vector column(std::size_t c) const;
  void set_column(std::size_t c, const Vector& v);

  std::span<const double> data() const noexcept { return data_; }
  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---- basic vector/matrix arithmetic -------------------------------------

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);
/// y <- y + alpha * x
void axpy(double alpha, const Vector& x, Vector& y);
Vector subtract(const Vector& a, const Vector& b);
Vector scaled(double alpha, const Vector& v);

Vector matvec(const Matrix& m, const Vector& v);
/// Computes m^T v without forming the transpose.
Vector transpose_matvec(const Matrix& m, const Vector& v);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix symmetrized(const Matrix& m);

double frobenius_norm(const Matrix& m);
double max_abs(const Matrix& m);
/// Largest absolute entry of a - b; the shapes must agree.
double max_abs_diff(const Matrix& a, const Matrix& b);

// ---- factorizations -------------------------------------------------------

struct ThinQr {
  Matrix q;  ///< n x m, orthonormal columns
  Matrix r;  ///< m x m, upper triangular with nonnegative diagonal
};

/// Relative threshold on diag(R) below which a column counts as dependent.
inline constexpr double kRankTolerance = 1e-14;

/// Householder thin QR of an n x m matrix (n >= m >= 1).
/// Throws RankDeficiency carrying the first column whose R diagonal falls
/// below kRankTolerance * ||G||_F.
ThinQr thin_qr(const Matrix& g);

struct ExtendedCholesky {
  Matrix r;  ///< m x m upper triangular, R^T R = S[:, 0:m]
  Vector r_last;  ///< R^T r_last = S[:, m]
};

/// Factors S = G^T [G g+] (m x (m+1)) as R^T [R r]. Throws RankDeficiency on
/// a nonpositive pivot.
ExtendedCholesky partially_extended_cholesky(const Matrix& s);

/// Solves R X = B by back substitution. Throws Singularity on an exactly
/// zero diagonal entry.
Matrix solve_upper_triangular(const Matrix& r, const Matrix& b);
Vector solve_upper_triangular(const Matrix& r, const Vector& b);

struct SymmetricEigen {
  Vector values;  ///< sorted in decreasing order
  Matrix vectors;  ///< unit eigenvectors, column j pairs with values[j]
};

inline constexpr std::size_t kMaxSmallEigenDimension = 64;

/// Eigen-decomposition of a small symmetric matrix via Householder
/// tridiagonalization and implicit-shift QL. Input asymmetry above 1e-10
/// relative to max|T| is a ContractViolation; anything below is symmetrized.
SymmetricEigen symmetric_eigenvalues_small(const Matrix& t);

/// Spectral norm of R^{-1}, formed explicitly. Throws Singularity.
double inverse_norm_upper_triangular(const Matrix& r);

/// Haar-distributed orthogonal matrix, deterministic in `seed`.
Matrix random_orthogonal(std::size_t n, std::uint64_t seed);

}  // namespace lmsd::linalg
