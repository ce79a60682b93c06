#pragma once

#include <stdexcept>
#include <string>

namespace batchq {

/// Category of a failure; mirrored one-to-one by the C API status codes.
enum class ErrorKind {
  domain,           // argument outside the valid range (batch size, action, state)
  config,           // invalid configuration value
  stability,        // rho >= 1
  fit,              // degenerate regression design
  model_violation,  // fitted/loaded values violate the service model
  structure,        // chain is not unichain
  exhausted,        // search grid had no acceptable point
  io,               // file or format problem
  instability,      // simulated queue grew without bound
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace batchq
