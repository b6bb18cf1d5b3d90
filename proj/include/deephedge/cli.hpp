#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace deephedge::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsageError = 2,
    kNumericDivergence = 3,
    kIoError = 4,
};

/// Entry point shared by the executable and the tests. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace deephedge::cli
