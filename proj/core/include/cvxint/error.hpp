#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cvxint {

enum class ErrorKind {
  ShapeMismatch,
  InvalidArgument,
  ZeroVector,
  NonUnit,
  NotRankOne,
  NumericConvergence,
  NotOnSegment,
  DuplicateAtom,
  BadWeight,
  NotInHull,
  NonDiagonal,
  ConstraintViolated,
  DegenerateDirection,
  NonCanonical,
  InfeasibleTau,
  OutOfDomain,
  NonInjective,
  Infeasible,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace cvxint
