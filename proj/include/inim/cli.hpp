#pragma once

#include <iosfwd>

namespace inim {

/// Exit codes of run_cli.
enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitConfig = 2 };

/// Entry point behind the `inim` executable (subcommands run, generate,
/// metrics, serve); writes to the given streams.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace inim
