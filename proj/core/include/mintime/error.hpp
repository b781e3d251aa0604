#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mintime {

enum class ErrorCode {
  kInvalidArgument,
  kZeroCostate,
  kOffBoundary,
  kDegenerateGradient,
  kNonConvergence,
  kPreconditionViolation,
  kCostateBlowup,
  kCflViolation,
  kInsufficientPoints,
  kParse,
  kValidation,
  kMissingInputs,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code; every failure in the toolkit is one of these.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mintime
