#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lmsd {

/// Raised when a caller breaks a documented precondition (dimension mismatch,
/// invalid configuration, malformed input document).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A factorization found a column (or pivot) that is numerically dependent on
/// the preceding ones. `index()` is zero-based.
class RankDeficiency : public std::runtime_error {
 public:
  RankDeficiency(std::size_t index, const std::string& what)
      : std::runtime_error(what), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// A triangular matrix has an exactly zero diagonal entry.
class Singularity : public std::runtime_error {
 public:
  Singularity(std::size_t index, const std::string& what)
      : std::runtime_error(what), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace lmsd
