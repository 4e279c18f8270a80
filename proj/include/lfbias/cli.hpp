#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lfbias {

// Exit codes of the bias_cli driver.
enum ExitCode : int {
    kExitOk = 0,
    kExitMismatch = 1,
    kExitUsage = 2,
    kExitIo = 3,
};

// Runs one bias_cli invocation. args excludes the program name. Reports go to
// `out` unless --output names a file; progress and diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lfbias
