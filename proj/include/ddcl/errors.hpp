#pragma once

#include <stdexcept>
#include <string>

namespace ddcl {

// Bad hyperparameters or flags.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Unreadable, ragged or missing input data.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values during training or flow integration.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input too short or too flat for a statistic to be defined.
struct DegenerateInput : std::domain_error {
  using std::domain_error::domain_error;
};

}  // namespace ddcl
