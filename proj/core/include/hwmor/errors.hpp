#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hwmor {

enum class ErrorCode {
  // input validation
  MissingValue,
  NonMonotonicDates,
  TenorParseError,
  InvalidArgument,
  ScheduleMismatch,
  InsufficientSpace,
  NonPositiveError,
  OutOfDomain,
  DegenerateDomain,
  DomainError,
  IoError,
  StaleArtifact,
  // numerical failures
  NonPositiveRate,
  RankDeficient,
  SingularDiagonal,
  SolveFailure,
  ConvergenceFailure,
  CalibrationFailure,
};

std::string_view to_string(ErrorCode code) noexcept;

/// True for errors caused by bad input (CLI exit code 2); false for numerical
/// failures (exit code 3).
bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace hwmor
