#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace datamarket {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInvalid = 1,  // parse or validation failure
  kExitSolver = 2,   // solver or certification failure
  kExitUsage = 3,
};

/// Runs one command. `args` excludes the program name. Primary output goes to
/// `out` (or to the file named by --out), diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace datamarket
