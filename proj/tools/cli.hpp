#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kgard::cli {

/// Runs one command line (args[0] is the program name). Returns 0 on
/// success, 2 on argument errors and 1 on runtime or numerical failures.
/// Errors go to `err` as "error: <category>: <message>".
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int dispatch(int argc, char** argv);

}  // namespace kgard::cli
