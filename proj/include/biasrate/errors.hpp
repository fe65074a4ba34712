#pragma once

#include <stdexcept>
#include <string>

namespace biasrate {

/// Base for every error raised by the library. The CLI maps subclasses onto
/// process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// API misuse: empty lists where a nonempty one is required, bad tokens.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed numeric input (counts, statistics, domain violations).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A distribution spec that breaks its invariants.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration: templates, services, unsupported language pairs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A service failed while transforming text.
class ExecutionError : public Error {
 public:
  using Error::Error;
};

/// A remote call kept failing after every retry.
class NetworkExhaustedError : public ExecutionError {
 public:
  using ExecutionError::ExecutionError;
};

}  // namespace biasrate
