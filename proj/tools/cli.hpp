#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace blockreduce::cli {

/// Exit statuses of the experiment runner.
enum ExitStatus : int {
  exit_ok = 0,
  exit_failure = 1,            // any error not listed below
  exit_bad_input = 2,          // unreadable, malformed or invalid config / scenario
  exit_invariant_violation = 3,  // consistency check or scenario assertion failed
};

/// Runs the experiment runner with `args` (without the program name).
/// Normal output goes to `out`, progress and error reports to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace blockreduce::cli
