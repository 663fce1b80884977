#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wrep::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 1,
  kInputOutput = 2,
  kDataSchema = 3,
  kNumerical = 4,
};

/// Entry point shared by the `wrep` binary and tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wrep::cli
