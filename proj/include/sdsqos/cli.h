// Command-line front end: run, compare, sweep and paper-example.

#ifndef SDSQOS_CLI_H_
#define SDSQOS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

#include "absl/status/status.h"

namespace sdsqos {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,  // also output I/O failures
  kExitInvariant = 3,
};

// Maps a failed status to its exit code: Internal means a broken simulator
// invariant, anything else is a configuration or I/O problem.
int ExitCodeFor(const absl::Status& status);

// `args` excludes the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdsqos

#endif  // SDSQOS_CLI_H_
