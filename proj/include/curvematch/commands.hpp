#pragma once

#include <string>
#include <vector>

namespace curvematch {

// Full command-line entry point; args exclude the program name.  Returns the
// process exit code: 0 success, 1 invalid input or failure, 2 finished
// without meeting the convergence tolerance.
int run_cli(std::vector<std::string> args);

}  // namespace curvematch
