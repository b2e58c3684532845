// Batch front-end: one subcommand per operation, JSON reports on output.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace waring_gaps::cli {

/// Runs one invocation (arguments exclude the program name) and returns the
/// exit status: 0 PASS, 1 FAIL, 2 inconclusive, 3 invalid input.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace waring_gaps::cli
