#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace conewidth {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Mismatched vector/matrix sizes.
struct DimensionError : Error {
  using Error::Error;
};

// Inputs outside the domain an operation is defined on (e.g. Poisson
// linear predictor above the cap, infeasible iterate).
struct DomainError : Error {
  using Error::Error;
};

// Iterative routine gave up: iteration cap, step underflow, non-finite value.
struct ConvergenceError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  ConfigError(std::string key, const std::string& what)
      : Error(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace conewidth
