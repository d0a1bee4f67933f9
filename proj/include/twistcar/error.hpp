#ifndef TWISTCAR_ERROR_HPP
#define TWISTCAR_ERROR_HPP

#include <stdexcept>
#include <string>

namespace twistcar {

/// Bad user input: parameters, configuration files, data files.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation could not be completed (singular system, step underflow, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Steering geometry reached l2 + l1 cos(phi) <= tolerance.
class SingularityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A quantity sits on the direction-reversal boundary (zero net propulsion).
class BoundaryError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace twistcar

#endif  // TWISTCAR_ERROR_HPP
