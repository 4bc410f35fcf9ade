#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fixedk::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kCompute = 2, kData = 3 };

/// Runs one command line (without the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fixedk::cli
