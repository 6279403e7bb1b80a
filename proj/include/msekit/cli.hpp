#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace msekit::cli {

/// Runs the command line `args` (without the program name). Results go to
/// `out` unless --output is given; status lines (seed, warnings) go to `err`.
/// Returns 0 on success, 1 on a runtime error and 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace msekit::cli
