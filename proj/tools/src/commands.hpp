#pragma once

#include <string>
#include <vector>

namespace fprobe::cli {

/// Runs one invocation; `args` excludes the program name. Exit status is 0 on
/// success, 1 when some component (a period, a probe cell) failed, 2 on a
/// fatal or usage error.
int run(std::vector<std::string> args);

}  // namespace fprobe::cli
