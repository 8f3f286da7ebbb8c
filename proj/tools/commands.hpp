#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mza::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kMissingArtifact = 3,
  kNumericalFailure = 4,
};

// Parses argv (argv[0] is the program name) and runs the command.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace mza::cli
