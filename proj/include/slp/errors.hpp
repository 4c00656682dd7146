#pragma once

#include <stdexcept>
#include <string>

namespace slp {

// Invalid user input: a bad parameter, a malformed config, an unknown key.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Both control beams are off, so the alpha weights are 0/0.
class ControlsOffError : public DomainError {
 public:
  ControlsOffError() : DomainError("controls-off: both Rabi frequencies are zero") {}
};

// Solver failure: instability, non-convergence, singular boundary solve.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Requested step exceeds the explicit stability bound.
class StepSizeError : public NumericalError {
 public:
  explicit StepSizeError(const std::string& what) : NumericalError(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace slp
