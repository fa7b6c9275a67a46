#pragma once

#include <stdexcept>
#include <string>

namespace impulse_qvi {

/// Bad configuration or arguments that violate an operation's preconditions.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical procedure failed (singular system, broken monotonicity, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace impulse_qvi
