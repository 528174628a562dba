#pragma once

#include <iosfwd>
#include <string>

namespace testport::cli {

/// Process exit codes.
enum ExitCode : int {
    kSuccess = 0,
    kUsageError = 1,
    kAborted = 2,
    kBudgetExhausted = 3,
    kEvaluationError = 4,
};

/// Entry point behind the `testport` executable. `self_exe` is the binary
/// spawned for `--jobs` batch workers.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
         const std::string& self_exe = "/proc/self/exe");

}  // namespace testport::cli
