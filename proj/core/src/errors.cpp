#include "hwmor/errors.hpp"

namespace hwmor {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::NonMonotonicDates: return "NonMonotonicDates";
    case ErrorCode::TenorParseError: return "TenorParseError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ScheduleMismatch: return "ScheduleMismatch";
    case ErrorCode::InsufficientSpace: return "InsufficientSpace";
    case ErrorCode::NonPositiveError: return "NonPositiveError";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::DegenerateDomain: return "DegenerateDomain";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::StaleArtifact: return "StaleArtifact";
    case ErrorCode::NonPositiveRate: return "NonPositiveRate";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::SingularDiagonal: return "SingularDiagonal";
    case ErrorCode::SolveFailure: return "SolveFailure";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::CalibrationFailure: return "CalibrationFailure";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonPositiveRate:
    case ErrorCode::RankDeficient:
    case ErrorCode::SingularDiagonal:
    case ErrorCode::SolveFailure:
    case ErrorCode::ConvergenceFailure:
    case ErrorCode::CalibrationFailure:
      return false;
    default:
      return true;
  }
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace hwmor
