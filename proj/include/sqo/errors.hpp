#ifndef SQO_ERRORS_HPP
#define SQO_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sqo {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments: dimension mismatch, empty inputs, non-positive constants.
class InputError : public Error {
 public:
  using Error::Error;
};

// The problem lacks the closed-form quantity being asked for (x*, inf f).
class UnsupportedQuery : public Error {
 public:
  using Error::Error;
};

// An object was used before it was ready (e.g. a surrogate table with empty slots).
class StateError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf where a finite value is required, or inconsistent floating results.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t iteration, double gap)
      : Error("divergence at iteration " + std::to_string(iteration) +
              " (gap " + std::to_string(gap) + ")"),
        iteration_(iteration),
        gap_(gap) {}

  std::size_t iteration() const noexcept { return iteration_; }
  double gap() const noexcept { return gap_; }

 private:
  std::size_t iteration_;
  double gap_;
};

// A stepsize outside the admissible region of the bound being evaluated.
class StepsizeViolation : public Error {
 public:
  using Error::Error;
};

// A structural invariant among constants does not hold (e.g. c < 4 C2).
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

// Config validation failure. Carries every problem found, not just the first.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : Error(join(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "invalid config:";
    for (const auto& s : issues) out += "\n  - " + s;
    return out;
  }

  std::vector<std::string> issues_;
};

}  // namespace sqo

#endif  // SQO_ERRORS_HPP
