#pragma once

#include <iosfwd>

namespace droc {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitNotConverged = 3,
  kExitDegenerate = 4,
  kExitDimension = 5,
  kExitModelIO = 6,
};

/// Entry point of the `droc` tool. Subcommands: gen-data, train, predict,
/// cv, grid, bench. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace droc
