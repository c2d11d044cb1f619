#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ebcs {

enum class ErrorCode {
  Validation,
  Parse,
  IncompleteDay,
  Empty,
  Overlap,
  BadTime,
  MissingRecord,
  ScheduleMismatch,
  TooManyBinaries,
  SizeLimit,
  SingularMomentMatrix,
  AllFrozen,
  DimensionMismatch,
  Degenerate,
  FrozenDimension,
  EmptyHistory,
  Io,
  MissingArtifact,
  SolverBug,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// One failed invariant, addressed by a dotted field path such as `ess.soc_min_pct`.
struct Violation {
  std::string field;
  std::string message;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations);

  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

}  // namespace ebcs
