#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vpatch {

enum class ErrorCode {
  InvalidArgument,
  MaskNotSimplyConnected,
  ResolutionTooCoarse,
  GridMismatch,
  CoincidentPoints,
  OutsideDomain,
  SingularSystem,
  NoInteriorMinimum,
  DegenerateMinimum,
  InfeasibleArea,
  BallNotContained,
  BallsOverlap,
  NotConverged,
  SupportTouchesBallBoundary,
  EmptySupport,
  CirculationMismatch,
  TestFunctionInfeasible,
  CFLViolation,
  SupportLeavesDomain,
  Inapplicable,
  NonDiskDomain,
  ConfigError,
  IoError,
};

std::string_view error_name(ErrorCode code) noexcept;

/// Every failure raised by the library carries a machine-readable code so the
/// CLI can emit structured failure lists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vpatch
