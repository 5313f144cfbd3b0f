#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ivmcd::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kInputError = 2, kDegenerate = 3 };

/// Run the tool with `args` (program name excluded).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ivmcd::cli
