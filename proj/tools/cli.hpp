#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wipt::cli {

/// Runs the command line `args` (args[0] is the program name).
/// Returns 0 on success, 1 on a domain, infeasibility or I/O error and 2
/// on a usage error. Results go to `out` unless an output path is given;
/// diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv);

}  // namespace wipt::cli
