#include "ebcs/error.hpp"

namespace ebcs {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Validation: return "VALIDATION";
    case ErrorCode::Parse: return "PARSE";
    case ErrorCode::IncompleteDay: return "INCOMPLETE_DAY";
    case ErrorCode::Empty: return "EMPTY";
    case ErrorCode::Overlap: return "OVERLAP";
    case ErrorCode::BadTime: return "BAD_TIME";
    case ErrorCode::MissingRecord: return "MISSING_RECORD";
    case ErrorCode::ScheduleMismatch: return "SCHEDULE_MISMATCH";
    case ErrorCode::TooManyBinaries: return "TOO_MANY_BINARIES";
    case ErrorCode::SizeLimit: return "SIZE_LIMIT";
    case ErrorCode::SingularMomentMatrix: return "SINGULAR_MOMENT_MATRIX";
    case ErrorCode::AllFrozen: return "ALL_FROZEN";
    case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::Degenerate: return "DEGENERATE";
    case ErrorCode::FrozenDimension: return "FROZEN_DIMENSION";
    case ErrorCode::EmptyHistory: return "EMPTY_HISTORY";
    case ErrorCode::Io: return "IO";
    case ErrorCode::MissingArtifact: return "MISSING_ARTIFACT";
    case ErrorCode::SolverBug: return "SOLVER_BUG";
  }
  return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

namespace {

std::string join_violations(const std::vector<Violation>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.field + ": " + v.message;
  }
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(ErrorCode::Validation, join_violations(violations)), violations_(std::move(violations)) {}

}  // namespace ebcs
