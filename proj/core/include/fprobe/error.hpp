#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fprobe {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the arguments was violated (e.g. T does not divide N).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, read, or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A file was readable but its contents do not follow the exchange format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Embedding payload contains NaN or Inf. `rows()` lists every offending row.
class NonFiniteError : public FormatError {
 public:
  explicit NonFiniteError(std::vector<std::size_t> rows);
  const std::vector<std::size_t>& rows() const noexcept { return rows_; }

 private:
  std::vector<std::size_t> rows_;
};

/// A matrix that must be positive definite is not, within tolerance.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

}  // namespace fprobe
