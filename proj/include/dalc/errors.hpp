#pragma once

#include <stdexcept>
#include <string>

namespace dalc {

// Error taxonomy. CLI exit-code mapping: ConfigError -> 1 (usage),
// DataError / ProtocolError -> 2 (bad input), everything else -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid model parameters, malformed configuration files, bad flags.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An operation was called outside its contract (wrong window length,
// action unavailable in a state, terminal-state policy lookup).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Input data violates the format or value constraints (CSV rows,
// out-of-range speeds, empty datasets).
class DataError : public Error {
 public:
  using Error::Error;
};

// A wire message failed to parse or carried the wrong fields.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Training failed (divergence, non-finite loss).
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Socket / channel failures.
class NetError : public Error {
 public:
  using Error::Error;
};

// Value iteration did not converge within the sweep cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace dalc
