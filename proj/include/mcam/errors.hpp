#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mcam {

/// Raised when an argument lies outside the domain of a model primitive.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised by configuration validation; carries every violation found.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> violations);

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Raised when a configuration file cannot be parsed.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a Monte Carlo path leaves the finite reals.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, std::size_t step)
      : std::runtime_error(what), step_(step) {}

  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

}  // namespace mcam
