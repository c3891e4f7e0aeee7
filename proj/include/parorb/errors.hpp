#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace parorb {

// Contract violation in an API call (sizes, grids, parameter ranges).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Orthonormalization rejected a numerically rank-deficient orbital set.
class DegenerateSetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Nonmonotone line search exhausted its backtracking budget.
class StagnationError : public std::runtime_error {
 public:
  StagnationError(const std::string& what, std::vector<double> trials)
      : std::runtime_error(what), trial_energies(std::move(trials)) {}

  std::vector<double> trial_energies;
};

// An iterative linear solver failed to reach its tolerance.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace parorb
