#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace socratic::cli {

/// Process exit codes. Outcome codes come from `ask`.
enum ExitCode : int {
  kExitOk = 0,
  kExitDivergence = 1,
  kExitUsage = 2,
  kExitRejected = 3,
  kExitFallback = 4,
  kExitBackendUnavailable = 5,
};

/// Entry point shared by the binary and the tests. `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace socratic::cli
