#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace surgcurate::app {

enum ExitCode : int { kOk = 0, kOperationalError = 1, kUsageError = 2 };

// Runs one CLI invocation. `args` excludes the program name. Reads
// SURGCURATE_* variables from the process environment.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace surgcurate::app
