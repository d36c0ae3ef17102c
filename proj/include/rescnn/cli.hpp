#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace rescnn {

// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumerical = 3,
};

// Entry point for the `rescnn` tool. `args` excludes the program name.
// Subcommands: synth, train, eval, gradcheck. `--manifest <file>` replays
// the run recorded in a previous manifest.txt.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace rescnn
