#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace asyncnet {

/// Malformed network description, unknown symbol, or violated precondition
/// on user-supplied data.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public ConfigError {
 public:
  SyntaxError(std::size_t offset, std::vector<std::string> expected,
              const std::string& message);

  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

/// Raised while evaluating an expression; carries the offending subexpression.
class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& message, std::string subexpression)
      : std::runtime_error(message + " in '" + subexpression + "'"),
        subexpression_(std::move(subexpression)) {}

  const std::string& subexpression() const { return subexpression_; }

 private:
  std::string subexpression_;
};

class ChatterDetected : public std::runtime_error {
 public:
  ChatterDetected(double t, int switches)
      : std::runtime_error("chatter detected: " + std::to_string(switches) +
                           " structure switches near t=" + std::to_string(t)),
        time(t) {}
  double time;
};

class PreconditionFailed : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class BoundaryMismatch : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class CyclicPrecedence : public ConfigError {
 public:
  explicit CyclicPrecedence(std::vector<std::string> cycle);
  const std::vector<std::string>& cycle() const { return cycle_; }

 private:
  std::vector<std::string> cycle_;
};

}  // namespace asyncnet
