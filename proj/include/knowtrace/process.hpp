#pragma once

#include <string>
#include <vector>

namespace knowtrace {

struct ProcessResult {
    int exit_code = -1;  // 128 + signal number when killed by a signal
    std::string out;     // captured stdout; stderr is inherited
};

/// Runs argv[0] (looked up on PATH) with the given arguments and waits for
/// it. Throws Error if the process cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv);

}  // namespace knowtrace
