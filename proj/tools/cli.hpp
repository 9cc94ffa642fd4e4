#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace abundance::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kValidation = 2, kFit = 3 };

/// Runs one command line (args[0] is the program name).
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_dispatch(int argc, const char* const* argv);

}  // namespace abundance::cli
