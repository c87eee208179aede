#pragma once

#include <stdexcept>
#include <string>

namespace nmguard {

/// Base class for every error raised by the library. The exit code is what the
/// command-line tool returns when the error escapes a subcommand.
class Error : public std::runtime_error {
 public:
  Error(const std::string& what, int exit_code) : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

/// Bad arguments, unknown config keys, malformed config values.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(what, 1) {}
};

/// Input data that violates a schema or a domain invariant.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what, 2) {}
};

/// Non-finite values produced during training or a forward pass.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what) : Error(what, 3) {}
};

}  // namespace nmguard
