#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stedeflick::cli {

enum ExitCode : int {
  kSuccess = 0,
  kProcessingError = 1,
  kUsageError = 2,
};

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace stedeflick::cli
