#pragma once

#include <stdexcept>
#include <string>

namespace ucp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or a configuration that violates an operation's preconditions.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent configuration (unknown key, wrong type, bad unit value).
class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// Iterative solve or bracketing failure.  `diagnostics` carries residuals or
// bracket endpoints so callers can report them.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::string diagnostics = {})
      : Error(what), diagnostics_(std::move(diagnostics)) {}
  [[nodiscard]] const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string diagnostics_;
};

// A state handed to an operation does not satisfy the operation's contract
// (for example a distribution that does not vanish at the truncation energy).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace ucp
