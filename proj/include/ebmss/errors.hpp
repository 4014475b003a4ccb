#pragma once

#include <stdexcept>
#include <string>

namespace ebmss {

/// Bad input: malformed files, inconsistent dimensions, violated preconditions.
class input_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not produce a valid result (non-PSD covariance,
/// singular regressors, non-positive innovation variance, ...).
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ebmss
