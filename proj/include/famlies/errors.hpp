#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace famlies {

using index_t = std::ptrdiff_t;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Non-conformal operand shapes, out-of-range ranges, bad block sizes.
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// Output storage overlaps an input operand.
class AliasingError : public Error {
  public:
    using Error::Error;
};

/// Operand dtypes or kernel configuration do not fit together.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// A Cholesky pivot was not strictly positive.
class NotPositiveDefinite : public Error {
  public:
    explicit NotPositiveDefinite(index_t index)
        : Error("matrix is not positive definite: non-positive pivot at index " +
                std::to_string(index)),
          index_(index) {}
    index_t index() const noexcept { return index_; }

  private:
    index_t index_;
};

/// A triangular solve hit an exactly-zero diagonal entry.
class SingularMatrix : public Error {
  public:
    explicit SingularMatrix(index_t column)
        : Error("singular matrix: zero diagonal at column " + std::to_string(column)),
          column_(column) {}
    index_t column() const noexcept { return column_; }

  private:
    index_t column_;
};

/// Input violates a structural precondition (e.g. a matrix that must be skew-symmetric is not).
class ContractError : public Error {
  public:
    using Error::Error;
};

} // namespace famlies
