#pragma once

#include <iosfwd>

namespace pirate::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInvalidConfig = 2,
  kPortBusy = 3,
  kBootstrapFailed = 4,
  kTransportFailed = 5,
  kMissingArtifacts = 6,
};

// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pirate::cli
