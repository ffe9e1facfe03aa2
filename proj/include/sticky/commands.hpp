#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sticky {

enum ExitCode : int {
  kExitOk = 0,
  kExitAssumption = 2,
  kExitVerification = 3,
  kExitInput = 4,
};

// Entry point of the `sticky` command line; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sticky
