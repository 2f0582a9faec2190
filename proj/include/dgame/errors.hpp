#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dgame {

// Malformed arguments: dimension mismatch, bad indices, grid mismatch.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Step length incompatible with the discount rate (requires 0 < rho*h < 1).
class InvalidStep : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Sampling requested on a domain that is not a bounded box.
class UnsupportedDomain : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A trajectory produced a non-finite state.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

// Value iteration hit its iteration cap.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

}  // namespace dgame
