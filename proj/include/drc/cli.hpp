#pragma once

// The `drc` command-line tool: shape, render, fit, fuse, eval, gradcheck,
// repro, rerun and defaults subcommands.
//
// Exit codes: 0 success, 1 usage error, 2 data or format error, 3 a check
// (gradcheck) failed.

#include <iosfwd>
#include <string>
#include <vector>

namespace drc::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUsageError = 1, kDataError = 2, kCheckFailed = 3 };

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

struct DefaultEntry {
  const char* name;
  std::string value;
  const char* meaning;
};

/// Every numeric default used by the commands, in one place.
std::vector<DefaultEntry> defaults_table();

}  // namespace drc::cli
