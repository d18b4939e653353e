#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace atos {

// Argument errors are reported as std::invalid_argument throughout.

class NonconvergenceError : public std::runtime_error {
 public:
  NonconvergenceError(const std::string& what, std::size_t iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a check needs a closed form that the operator does not carry.
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace atos
