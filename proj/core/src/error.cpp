#include "cvxint/error.hpp"

namespace cvxint {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::NonUnit: return "NonUnit";
    case ErrorKind::NotRankOne: return "NotRankOne";
    case ErrorKind::NumericConvergence: return "NumericConvergence";
    case ErrorKind::NotOnSegment: return "NotOnSegment";
    case ErrorKind::DuplicateAtom: return "DuplicateAtom";
    case ErrorKind::BadWeight: return "BadWeight";
    case ErrorKind::NotInHull: return "NotInHull";
    case ErrorKind::NonDiagonal: return "NonDiagonal";
    case ErrorKind::ConstraintViolated: return "ConstraintViolated";
    case ErrorKind::DegenerateDirection: return "DegenerateDirection";
    case ErrorKind::NonCanonical: return "NonCanonical";
    case ErrorKind::InfeasibleTau: return "InfeasibleTau";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::NonInjective: return "NonInjective";
    case ErrorKind::Infeasible: return "Infeasible";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace cvxint
