#include "mintime/error.hpp"

namespace mintime {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kZeroCostate: return "zero-costate";
    case ErrorCode::kOffBoundary: return "off-boundary";
    case ErrorCode::kDegenerateGradient: return "degenerate-gradient";
    case ErrorCode::kNonConvergence: return "non-convergence";
    case ErrorCode::kPreconditionViolation: return "precondition-violation";
    case ErrorCode::kCostateBlowup: return "costate-blowup";
    case ErrorCode::kCflViolation: return "cfl-violation";
    case ErrorCode::kInsufficientPoints: return "insufficient-points";
    case ErrorCode::kParse: return "parse-error";
    case ErrorCode::kValidation: return "validation-error";
    case ErrorCode::kMissingInputs: return "missing-inputs";
  }
  return "unknown";
}

}  // namespace mintime
