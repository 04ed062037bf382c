#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace attkit {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad inputs: malformed files, broken invariants, dimension mismatches.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

// A design (or constraint) matrix is numerically rank deficient.
// `dependent_columns` lists indices of columns that are linear
// combinations of the others, as identified by the pivoted factorization.
class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(const std::string& what, std::vector<int> dependent)
      : Error(what), dependent_columns(std::move(dependent)) {}
  std::vector<int> dependent_columns;
};

// A constraint system has no solution. `violated_dimension` is the index
// of the worst-violated constraint row (-1 when not attributable), and
// `min_feasible_delta` carries per-covariate relaxations that would make
// the system feasible, when the solver can compute them.
class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what, int violated = -1,
                           std::vector<double> min_delta = {})
      : Error(what),
        violated_dimension(violated),
        min_feasible_delta(std::move(min_delta)) {}
  int violated_dimension;
  std::vector<double> min_feasible_delta;
};

// Complete or quasi-complete separation in a logistic fit.
class SeparationError : public Error {
 public:
  SeparationError(const std::string& what, std::vector<double> direction)
      : Error(what), separating_direction(std::move(direction)) {}
  std::vector<double> separating_direction;
};

// An iterative solver exhausted its budget. `trace` holds one entry per
// iteration (objective or residual), for post-mortem inspection.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> trace = {})
      : Error(what), trace(std::move(trace)) {}
  std::vector<double> trace;
};

}  // namespace attkit
