#pragma once

#include <string>
#include <vector>

namespace wincascade::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kInternalError = 1,
  kConfigError = 2,
  kDataError = 3,
  kUnsatisfiable = 4,
};

/// Parses argv-style arguments (args[0] is the program name) and runs the
/// selected subcommand. Diagnostics go to stderr.
int run(const std::vector<std::string>& args);

}  // namespace wincascade::cli
