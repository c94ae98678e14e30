#pragma once

#include <stdexcept>
#include <string>

namespace lmos {

// Base for all library errors so callers can catch one type at the boundary.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape or rank mismatch between operands.
struct DimensionError : Error {
  using Error::Error;
};

// Value outside the mathematical domain of an operation (log of a negative
// number, fractional power of a non-positive scale, overflowing exp, ...).
struct DomainError : Error {
  using Error::Error;
};

// Numerically rank-deficient input where an invertible one is required.
struct DegeneracyError : Error {
  using Error::Error;
};

// Violated API contract (wrong tape, missing backward call, empty sample set).
struct ContractError : Error {
  using Error::Error;
};

// Malformed configuration or command line.
struct ConfigError : Error {
  using Error::Error;
};

// File and serialization failures.
struct IoError : Error {
  using Error::Error;
};

// Training loss became non-finite or exceeded the divergence guard.
struct DivergenceError : Error {
  using Error::Error;
};

}  // namespace lmos
