#pragma once

#include "remove_eval/error.hpp"

namespace remove_eval::cli {

/// Process exit codes.
enum ExitCode : int {
    kOk = 0,
    kUsage = 2,
    kIo = 3,
    kDegenerateMask = 4,
    kEncoderFailure = 5,
    kConfiguration = 6,
    kValidation = 7,
    kZeroVector = 8,
    kInternal = 9,
    /// evaluate stopped early (--stop-after); rerun with the same flags to resume
    kIncomplete = 10,
};

int exit_code_for(ErrorCode code);

/// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv);

}  // namespace remove_eval::cli
