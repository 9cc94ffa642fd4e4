#pragma once

#include <stdexcept>
#include <string>

namespace abundance {

/// Malformed input: bad CSV, inconsistent dataset, invalid configuration.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A sampler could not produce a usable chain (non-finite posterior, ...).
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cholesky factorization hit a non-positive leading minor.
class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace abundance
