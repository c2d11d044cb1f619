#pragma once

#include <string>
#include <vector>

namespace ebcs::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfigError = 2,
  kSolveFailure = 3,
  kMissingArtifact = 4,
  kInternal = 5,
};

int run(int argc, char** argv);
/// Same as above with argv[0] supplied; convenient for in-process tests.
int run(const std::vector<std::string>& args);

}  // namespace ebcs::cli
