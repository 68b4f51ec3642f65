#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dagnas::cli {

enum ExitCode : int {
  kOk = 0,
  kInternalError = 1,
  kConfigError = 2,
  kIoError = 3,
  kNumericError = 4,
};

/// Entry point of the `dagnas` tool. `args[0]` is the program name.
/// Subcommands: make-dataset, grow, baseline, compare, export-dot, replay.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

/// Parses "a,b..c,d..e:s" into the listed integers.
std::vector<std::size_t> parse_int_set(const std::string& text);

}  // namespace dagnas::cli
