#pragma once

#include <stdexcept>
#include <string>

namespace hlearn {

// Operands built for different qubit counts.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Out-of-range or inconsistent user parameter.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Dense simulation requested beyond the configured qubit cap.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A quantity that must be real (or unitary, or normalized) failed its check.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Estimator query outside the locality the dataset was built for.
struct QueryError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Random instance generation could not satisfy its constraints.
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed text, JSON document or archive.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hlearn
