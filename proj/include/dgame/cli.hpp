#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dgame {

// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 1,
  kExitRuntimeFailure = 2,  // non-convergence or divergence
  kExitCertificationFailed = 3,
};

// Runs one command, e.g. {"solve", "--config", "run.yaml"}. args excludes
// the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dgame
