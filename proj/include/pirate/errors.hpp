#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pirate {

// Broken precondition on an API call (wrong dimensions, empty input, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptyStoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Network-level failure; callers may retry.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The peer answered, but not with what the wire protocol promises.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BootstrapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input file problem tied to a 1-based line number (0 when unknown).
class LoadError : public std::runtime_error {
 public:
  LoadError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public LoadError {
 public:
  using LoadError::LoadError;
};

}  // namespace pirate
