#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sofsyn {

// Operand dimensions do not agree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input violates an operation's precondition (e.g. asymmetric matrix passed to
// a symmetric eigensolver).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical breakdown: singular systems, non-convergent iterations.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A system norm requested for a system where it is not finite (unstable
// dynamics, or direct feedthrough for the H2 norm).
class UndefinedNormError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A plant or configuration field that violates its invariants.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace sofsyn
