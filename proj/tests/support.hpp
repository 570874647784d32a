#pragma once

#include <cmath>

#include "lmsd/dense.hpp"
#include "oracles.hpp"

namespace testing_support {

inline oracle::Mat to_oracle(const lmsd::linalg::Matrix& m) {
  oracle::Mat out = oracle::zeros(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  return out;
}

inline lmsd::linalg::Matrix from_oracle(const oracle::Mat& m) {
  lmsd::linalg::Matrix out(m.size(), m[0].size());
  for (std::size_t r = 0; r < m.size(); ++r)
    for (std::size_t c = 0; c < m[0].size(); ++c) out(r, c) = m[r][c];
  return out;
}

inline oracle::Vec to_oracle(const lmsd::linalg::Vector& v) { return v.values(); }

inline double relative_gap(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace testing_support
