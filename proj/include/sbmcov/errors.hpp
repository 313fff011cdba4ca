#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sbmcov {

// Two families: bad input (exit status 1 at the CLI) and numerical failure
// inside an otherwise valid computation (exit status 2).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public NumericalError {
 public:
  // minor is the 1-based order of the first leading minor that failed.
  explicit NotPositiveDefinite(std::size_t minor)
      : NumericalError("matrix is not positive definite (leading minor " +
                       std::to_string(minor) + ")"),
        minor_(minor) {}
  std::size_t minor() const { return minor_; }

 private:
  std::size_t minor_;
};

class DegeneratePivot : public NumericalError {
 public:
  explicit DegeneratePivot(std::size_t column)
      : NumericalError("degenerate pivot at column " + std::to_string(column + 1)),
        column_(column) {}
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

class Nonconvergent : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class GigDomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InvalidGigParams : public InputError {
 public:
  using InputError::InputError;
};

class ZeroVarianceColumn : public InputError {
 public:
  explicit ZeroVarianceColumn(std::size_t column)
      : InputError("column " + std::to_string(column + 1) + " has zero sum of squares"),
        column_(column) {}
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

class DimMismatch : public InputError {
 public:
  using InputError::InputError;
};

class EmptySampleSet : public InputError {
 public:
  EmptySampleSet() : InputError("posterior mean of an empty sample set") {}
};

}  // namespace sbmcov
