#pragma once

#include <stdexcept>
#include <string>

namespace dpo {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// Covariance matrix has an eigenvalue below the negative tolerance.
struct IndefiniteCovariance : Error {
  using Error::Error;
};

// Matrix square root is (numerically) singular, so its directional
// derivative is undefined.
struct SingularSqrtDerivative : Error {
  using Error::Error;
};

struct DynamicsEvaluationError : Error {
  DynamicsEvaluationError(const std::string& msg, int time_index, int sigma_index)
      : Error(msg + " (time index " + std::to_string(time_index) +
              ", sigma index " + std::to_string(sigma_index) + ")"),
        time_index(time_index),
        sigma_index(sigma_index) {}
  int time_index;
  int sigma_index;
};

struct AssemblyError : Error {
  using Error::Error;
};

struct RiccatiSingular : Error {
  using Error::Error;
};

// A solver callback returned a non-finite value at an accepted iterate.
struct NonFiniteCallback : Error {
  NonFiniteCallback(const std::string& msg, int row) : Error(msg), row(row) {}
  int row;  // offending constraint row, -1 for objective
};

}  // namespace dpo
