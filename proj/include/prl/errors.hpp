#pragma once

#include <stdexcept>
#include <string>

namespace prl {

/// Operand shapes do not agree (matmul, elementwise, parameter vectors).
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid configuration: bad hyperparameters, unknown keys, broken layer chains.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data (CSV rows, unknown classes, missing labels).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A training loss became non-finite or exceeded the divergence bound.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::string player, double value, const std::string& detail)
      : std::runtime_error(detail), player_(std::move(player)), value_(value) {}

  const std::string& player() const noexcept { return player_; }
  double value() const noexcept { return value_; }

 private:
  std::string player_;
  double value_;
};

}  // namespace prl
