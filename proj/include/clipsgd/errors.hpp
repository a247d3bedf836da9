#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace clipsgd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arithmetic between vectors of different dimension.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain of the operation (e.g. log_plus(0)).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity was produced where only finite reals are allowed.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration (bad spec file, missing field, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unusable input data (CSV ingestion, rank deficiency, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// The optimizer produced a non-finite iterate; `iteration()` is the index
/// of the first bad iterate.
class NonFiniteIterate : public Error {
 public:
  NonFiniteIterate(std::uint64_t iteration, const std::string& what)
      : Error(what), iteration_(iteration) {}
  std::uint64_t iteration() const noexcept { return iteration_; }

 private:
  std::uint64_t iteration_;
};

}  // namespace clipsgd
