#pragma once

#include <stdexcept>
#include <string>

namespace qrotor {

/// Invalid configuration or API misuse (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown: non-finite values, step-size underflow, failed
/// decompositions, overlap loss (CLI exit code 3). `reason` is a short
/// machine-readable tag that ends up in run metadata.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, std::string reason = "numerical")
      : std::runtime_error(what), reason_(std::move(reason)) {}
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string reason_;
};

/// A problem-size guard was exceeded (CLI exit code 4).
class GuardExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

}  // namespace qrotor
