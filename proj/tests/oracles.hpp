#pragma once

// Reference computations for the unit tests. Each one takes a different
// numerical path from the library code it checks: Gram-Schmidt instead of
// Householder, cyclic Jacobi instead of tridiagonal QL, explicit dense
// assembly instead of factored products, brute-force loops over formulas.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;  // row-major, rows of equal length
using Vec = std::vector<double>;

inline Mat zeros(std::size_t r, std::size_t c) { return Mat(r, Vec(c, 0.0)); }

inline Mat identity(std::size_t n) {
  Mat m = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
  return m;
}

inline Mat multiply(const Mat& a, const Mat& b) {
  Mat c = zeros(a.size(), b[0].size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline Mat transpose(const Mat& a) {
  Mat t = zeros(a[0].size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) t[j][i] = a[i][j];
  return t;
}

inline Vec apply(const Mat& a, const Vec& v) {
  Vec out(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) out[i] += a[i][j] * v[j];
  return out;
}

inline double dot(const Vec& a, const Vec& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

inline double norm(const Vec& v) { return std::sqrt(dot(v, v)); }

inline Vec column(const Mat& a, std::size_t c) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i][c];
  return out;
}

/// A = Q diag(lambda) Q^T assembled entry by entry.
inline Mat assemble(const Mat& q, const Vec& lambda) {
  const std::size_t n = q.size();
  Mat a = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      long double s = 0.0L;
      for (std::size_t k = 0; k < n; ++k) s += static_cast<long double>(q[i][k]) * lambda[k] * q[j][k];
      a[i][j] = static_cast<double>(s);
    }
  return a;
}

struct GsQr {
  Mat q;
  Mat r;
};

/// Modified Gram-Schmidt with one reorthogonalization pass; R has a
/// nonnegative diagonal.
inline GsQr gram_schmidt_qr(const Mat& g) {
  const std::size_t n = g.size();
  const std::size_t m = g[0].size();
  GsQr out{zeros(n, m), zeros(m, m)};
  for (std::size_t j = 0; j < m; ++j) {
    Vec v = column(g, j);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        const Vec qk = column(out.q, k);
        const double h = dot(qk, v);
        out.r[k][j] += h;
        for (std::size_t i = 0; i < n; ++i) v[i] -= h * qk[i];
      }
    }
    const double nv = norm(v);
    out.r[j][j] = nv;
    for (std::size_t i = 0; i < n; ++i) out.q[i][j] = v[i] / nv;
  }
  return out;
}

struct Eigen {
  Vec values;  // decreasing
  Mat vectors;  // column j pairs with values[j]
};

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
inline Eigen jacobi_eigen(Mat a) {
  const std::size_t n = a.size();
  Mat v = identity(n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-300) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  Eigen out{Vec(n), zeros(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a[order[j]][order[j]];
    for (std::size_t i = 0; i < n; ++i) out.vectors[i][j] = v[i][order[j]];
  }
  return out;
}

/// Inverse of an upper triangular matrix, one column at a time.
inline Mat upper_inverse(const Mat& r) {
  const std::size_t m = r.size();
  Mat x = zeros(m, m);
  for (std::size_t c = 0; c < m; ++c) {
    for (std::size_t i = m; i-- > 0;) {
      double s = (i == c) ? 1.0 : 0.0;
      for (std::size_t k = i + 1; k < m; ++k) s -= r[i][k] * x[k][c];
      x[i][c] = s / r[i][i];
    }
  }
  return x;
}

/// Number of eigenvalues of symmetric `a` strictly below `shift`, from the
/// signs of the pivots of an unpivoted LDL^T of (a - shift I).
inline std::size_t count_below(const Mat& a, double shift) {
  const std::size_t n = a.size();
  Mat l = a;
  for (std::size_t i = 0; i < n; ++i) l[i][i] -= shift;
  std::size_t negatives = 0;
  for (std::size_t k = 0; k < n; ++k) {
    double pivot = l[k][k];
    if (pivot == 0.0) pivot = -1e-300;
    if (pivot < 0.0) ++negatives;
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = l[i][k] / pivot;
      for (std::size_t j = k + 1; j < n; ++j) l[i][j] -= f * l[k][j];
    }
  }
  return negatives;
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by
/// bisection on the inertia count.
inline double largest_eigenvalue_bisection(const Mat& a) {
  double hi = 0.0;
  for (const Vec& row : a) {
    double s = 0.0;
    for (double x : row) s += std::abs(x);
    hi = std::max(hi, s);
  }
  double lo = 0.0;
  hi = hi * (1.0 + 1e-12) + 1e-300;
  const std::size_t n = a.size();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (count_below(a, mid) == n) hi = mid; else lo = mid;
  }
  return 0.5 * (lo + hi);
}

/// ||R^{-1}||_2 as the square root of the largest eigenvalue of X^T X with
/// X = R^{-1}, located by bisection.
inline double inverse_norm(const Mat& r) {
  const Mat x = upper_inverse(r);
  return std::sqrt(largest_eigenvalue_bisection(multiply(transpose(x), x)));
}

/// Ritz values of span(g) for A: eigenvalues of Q^T A Q with Q from
/// Gram-Schmidt, decreasing.
inline Vec ritz_values(const Mat& a, const Mat& g) {
  const GsQr f = gram_schmidt_qr(g);
  const Mat t = multiply(transpose(f.q), multiply(a, f.q));
  return jacobi_eigen(t).values;
}

/// Benchmark spectra written out directly from their interval descriptions.
inline Vec progression(double lo, double hi, std::size_t count) {
  Vec v(count);
  for (std::size_t i = 0; i < count; ++i) {
    v[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return v;
}

/// max(|1 - lambda_i/lambda_{m+1-j}|, |1 - lambda_i/lambda_{n+1-j}|), one-based j and i.
inline double step_factor(const Vec& lambda, std::size_t m, std::size_t j, std::size_t i) {
  const std::size_t n = lambda.size();
  const double li = lambda[i - 1];
  return std::max(std::abs(1.0 - li / lambda[m - j]), std::abs(1.0 - li / lambda[n - j]));
}

inline double cycle_factor(const Vec& lambda, std::size_t m, std::size_t i) {
  double p = 1.0;
  for (std::size_t j = 1; j <= m; ++j) p *= step_factor(lambda, m, j, i);
  return p;
}

/// Smallest integer K with K >= log(arg) / log(base), found by counting up
/// from below in extended precision.
inline long long ceiling_by_search(long double arg, long double base) {
  const long double q = std::log(arg) / std::log(base);
  long long k = static_cast<long long>(std::floor(q)) - 2;
  while (static_cast<long double>(k) < q) ++k;
  return k;
}

inline Mat random_matrix(std::size_t r, std::size_t c, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  Mat m = zeros(r, c);
  for (auto& row : m)
    for (double& x : row) x = nd(rng);
  return m;
}

}  // namespace oracle
