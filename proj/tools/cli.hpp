#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fracbvp::cli {

/// Process exit codes.
enum Exit : int {
  kOk = 0,
  kConfigError = 1,
  kConditionsFailed = 2,
  kNonConvergence = 3,
};

/// Runs the command line `args` (args[0] is the program name) and returns
/// the exit code. Diagnostics go to `err`, summaries to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fracbvp::cli
