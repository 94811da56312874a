#pragma once

#include <iosfwd>

namespace ehrelay {

inline constexpr const char* kVersion = "0.1.0";

/// Exit statuses of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitParse = 2,
  kExitValidation = 3,
  kExitNotConverged = 4,
  kExitCheckFailed = 5,
};

/// Entry point of the ehrelay tool; usable in-process by tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ehrelay
