#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace smartnie {

/// Runs one command line (without the program name). Returns the exit
/// code: 0 success, 1 data or validation error, 2 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace smartnie
