#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace codim::cli {

/// Exit codes of codimctl.
enum ExitCode : int { kOk = 0, kConfigError = 2, kValidationError = 3, kNumericalError = 4 };

/// Entry point shared by codimctl and the tests; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace codim::cli
