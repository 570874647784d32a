#include "lmsd/dense.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "lmsd/errors.hpp"

namespace lmsd::linalg {
namespace {

void require(bool condition, const char* what) {
  if (!condition) throw ContractViolation(what);
}

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

bool Vector::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  require(rows.size() > 0, "from_rows: no rows");
  const std::size_t cols = rows.begin()->size();
  require(cols > 0, "from_rows: empty row");
  Matrix m(rows.size(), cols);
  std::size_t r = 0;
  for (const auto& row : rows) {
    require(row.size() == cols, "from_rows: ragged rows");
    std::size_t c = 0;
    for (double x : row) m(r, c++) = x;
    ++r;
  }
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_columns(std::span<const Vector> columns) {
  require(!columns.empty(), "from_columns: no columns");
  const std::size_t n = columns.front().size();
  Matrix m(n, columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    require(columns[c].size() == n, "from_columns: columns differ in length");
    for (std::size_t r = 0; r < n; ++r) m(r, c) = columns[c][r];
  }
  return m;
}

Vector Matrix::column(std::size_t c) const {
  Vector v(rows_);
  for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
  return v;
}

void Matrix::set_column(std::size_t c, const Vector& v) {
  require(v.size() == rows_, "set_column: length mismatch");
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

double dot(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vector& v) {
  // Scaled accumulation keeps tiny gradients (near termination) from
  // underflowing when squared.
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double x : v) {
    const double y = x / scale;
    s += y * y;
  }
  return scale * std::sqrt(s);
}

void axpy(double alpha, const Vector& x, Vector& y) {
  require(x.size() == y.size(), "axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vector subtract(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "subtract: length mismatch");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector scaled(double alpha, const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = alpha * v[i];
  return out;
}

Vector matvec(const Matrix& m, const Vector& v) {
  if (m.cols() != v.size()) {
    throw ContractViolation("matvec: matrix " + dims(m) + " times vector of length " +
                            std::to_string(v.size()));
  }
  Vector out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) s += row[c] * v[c];
    out[r] = s;
  }
  return out;
}

Vector transpose_matvec(const Matrix& m, const Vector& v) {
  if (m.rows() != v.size()) {
    throw ContractViolation("transpose_matvec: matrix " + dims(m) + " with vector of length " +
                            std::to_string(v.size()));
  }
  Vector out(m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    const double vr = v[r];
    for (std::size_t c = 0; c < row.size(); ++c) out[c] += row[c] * vr;
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ContractViolation("matmul: " + dims(a) + " times " + dims(b));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(c, r) = m(r, c);
  return out;
}

Matrix symmetrized(const Matrix& m) {
  require(m.rows() == m.cols(), "symmetrized: matrix not square");
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = 0.5 * (m(r, c) + m(c, r));
  return out;
}

double frobenius_norm(const Matrix& m) {
  double scale = 0.0;
  for (double x : m.data()) scale = std::max(scale, std::abs(x));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double x : m.data()) {
    const double y = x / scale;
    s += y * y;
  }
  return scale * std::sqrt(s);
}

double max_abs(const Matrix& m) {
  double out = 0.0;
  for (double x : m.data()) out = std::max(out, std::abs(x));
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "max_abs_diff: shape mismatch");
  double out = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    out = std::max(out, std::abs(a.data()[i] - b.data()[i]));
  return out;
}

ThinQr thin_qr(const Matrix& g) {
  const std::size_t n = g.rows();
  const std::size_t m = g.cols();
  if (m < 1 || n < m) throw ContractViolation("thin_qr: requires n >= m >= 1, got " + dims(g));
  require(g.all_finite(), "thin_qr: nonfinite entry");

  const double gnorm = frobenius_norm(g);
  Matrix a = g;
  // Householder vectors, stored densely; reflector k acts on rows k..n-1.
  std::vector<Vector> reflectors;
  reflectors.reserve(m);

  for (std::size_t k = 0; k < m; ++k) {
    Vector v(n);
    double xnorm_sq = 0.0;
    for (std::size_t i = k; i < n; ++i) {
      v[i] = a(i, k);
      xnorm_sq += v[i] * v[i];
    }
    const double xnorm = std::sqrt(xnorm_sq);
    if (xnorm == 0.0) {
      reflectors.emplace_back(n);  // identity reflector
      continue;
    }
    v[k] += (v[k] >= 0.0 ? xnorm : -xnorm);
    double vnorm_sq = 0.0;
    for (std::size_t i = k; i < n; ++i) vnorm_sq += v[i] * v[i];
    const double vnorm = std::sqrt(vnorm_sq);
    for (std::size_t i = k; i < n; ++i) v[i] /= vnorm;

    for (std::size_t j = k; j < m; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < n; ++i) s += v[i] * a(i, j);
      for (std::size_t i = k; i < n; ++i) a(i, j) -= 2.0 * s * v[i];
    }
    reflectors.push_back(std::move(v));
  }

  ThinQr out{Matrix(n, m), Matrix(m, m)};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) out.r(i, j) = a(i, j);

  // Q = H_0 H_1 ... H_{m-1} [I; 0], applied right to left.
  for (std::size_t c = 0; c < m; ++c) out.q(c, c) = 1.0;
  for (std::size_t kk = m; kk-- > 0;) {
    const Vector& v = reflectors[kk];
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t i = kk; i < n; ++i) s += v[i] * out.q(i, j);
      if (s == 0.0) continue;
      for (std::size_t i = kk; i < n; ++i) out.q(i, j) -= 2.0 * s * v[i];
    }
  }

  for (std::size_t k = 0; k < m; ++k) {
    if (out.r(k, k) < 0.0) {
      for (std::size_t j = k; j < m; ++j) out.r(k, j) = -out.r(k, j);
      for (std::size_t i = 0; i < n; ++i) out.q(i, k) = -out.q(i, k);
    }
  }
  for (std::size_t k = 0; k < m; ++k) {
    if (!(out.r(k, k) >= kRankTolerance * gnorm) || gnorm == 0.0) {
      throw RankDeficiency(k, "thin_qr: column " + std::to_string(k) +
                                  " is numerically dependent on earlier columns");
    }
  }
  return out;
}

ExtendedCholesky partially_extended_cholesky(const Matrix& s) {
  const std::size_t m = s.rows();
  if (m < 1 || s.cols() != m + 1) {
    throw ContractViolation("partially_extended_cholesky: expected m x (m+1), got " + dims(s));
  }
  require(s.all_finite(), "partially_extended_cholesky: nonfinite entry");

  ExtendedCholesky out{Matrix(m, m), Vector(m)};
  Matrix& r = out.r;
  for (std::size_t j = 0; j < m; ++j) {
    double pivot = s(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= r(k, j) * r(k, j);
    if (!(pivot > 0.0)) {
      throw RankDeficiency(j, "partially_extended_cholesky: nonpositive pivot at index " +
                                  std::to_string(j));
    }
    r(j, j) = std::sqrt(pivot);
    // Row j of R, including the extended column m.
    for (std::size_t c = j + 1; c <= m; ++c) {
      double x = s(j, c);
      for (std::size_t k = 0; k < j; ++k) x -= r(k, j) * (c < m ? r(k, c) : out.r_last[k]);
      x /= r(j, j);
      if (c < m)
        r(j, c) = x;
      else
        out.r_last[j] = x;
    }
  }
  return out;
}

Matrix solve_upper_triangular(const Matrix& r, const Matrix& b) {
  const std::size_t m = r.rows();
  if (r.cols() != m || b.rows() != m) {
    throw ContractViolation("solve_upper_triangular: R " + dims(r) + ", B " + dims(b));
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (r(i, i) == 0.0) {
      throw Singularity(i, "solve_upper_triangular: zero diagonal at index " + std::to_string(i));
    }
  }
  Matrix x = b;
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t ii = m; ii-- > 0;) {
      double s = x(ii, c);
      for (std::size_t k = ii + 1; k < m; ++k) s -= r(ii, k) * x(k, c);
      x(ii, c) = s / r(ii, ii);
    }
  }
  return x;
}

Vector solve_upper_triangular(const Matrix& r, const Vector& b) {
  Matrix bm(b.size(), 1);
  bm.set_column(0, b);
  return solve_upper_triangular(r, bm).column(0);
}

double inverse_norm_upper_triangular(const Matrix& r) {
  const std::size_t m = r.rows();
  const Matrix inv = solve_upper_triangular(r, Matrix::identity(m));
  if (m == 1) return std::abs(inv(0, 0));
  const SymmetricEigen eig = symmetric_eigenvalues_small(matmul(transpose(inv), inv));
  return std::sqrt(std::max(0.0, eig.values[0]));
}

Matrix random_orthogonal(std::size_t n, std::uint64_t seed) {
  require(n >= 1, "random_orthogonal: n must be positive");
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) z(r, c) = normal(engine);
  // QR of a Gaussian matrix with diag(R) > 0 is Haar distributed.
  return thin_qr(z).q;
}

}  // namespace lmsd::linalg
