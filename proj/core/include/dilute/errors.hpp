#pragma once

#include <stdexcept>
#include <string>

namespace dilute {

// Invalid inputs, broken invariants, malformed configs. CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Request exceeds the configured memory/size budget. CLI exit code 3.
class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

// Shifted linear system is (numerically) singular at eps = 0.
class SingularityError : public std::runtime_error {
 public:
  SingularityError(const std::string& what, double gap)
      : std::runtime_error(what), eigenvalue_gap(gap) {}
  double eigenvalue_gap;
};

// A symbol minimum with a near-zero Hessian eigenvalue.
class DegeneracyError : public std::runtime_error {
 public:
  explicit DegeneracyError(const std::string& what) : std::runtime_error(what) {}
};

// Non-convergent tail in a lattice sum.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dilute
