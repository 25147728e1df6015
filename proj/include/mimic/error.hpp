#pragma once

#include <stdexcept>
#include <string>

namespace mimic {

// Bad user input: flags, config files, malformed data. CLI exit code 1.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Failures discovered while running: IO, divergence. CLI exit code 2.
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public RuntimeError {
 public:
  DivergenceError(int epoch, const std::string& what)
      : RuntimeError("training diverged at epoch " + std::to_string(epoch) + ": " + what),
        epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace mimic
