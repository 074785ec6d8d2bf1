#pragma once

#include <stdexcept>
#include <string>

namespace dnorm_lab {

// Violated precondition on caller input (bad parameter, malformed function,
// unsupported combination). Maps to CLI exit code 2.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure failed to reach its tolerance. Carries whatever
// partial value was available. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, double partial_value = 0.0)
      : std::runtime_error(what), partial_value_(partial_value) {}

  [[nodiscard]] double partial_value() const noexcept { return partial_value_; }

 private:
  double partial_value_;
};

}  // namespace dnorm_lab
