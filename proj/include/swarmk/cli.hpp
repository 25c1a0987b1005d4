#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace swarmk {

/// Exit codes of the command-line front end.
enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_model = 2, exit_numeric = 3 };

/// Entry point of the `swarmk` tool. Results go to `out` (or --out), all
/// diagnostics to `err`.
///
///   run | steady | sweep | mc | exact | compare | validate | list
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Same, with the arguments after the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace swarmk
