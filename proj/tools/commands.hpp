#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dualreg::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kUsageOrIo = 1,
  kRegistrationFailed = 2,
};

/// Entry point behind the `dualreg` binary. `args` excludes the program
/// name. Never throws for malformed input.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dualreg::cli
