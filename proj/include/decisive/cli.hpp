#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace decisive {

/// Entry point of the `decisive` tool. `args` excludes the program name.
/// Exit codes: 0 success, 1 runtime or IO failure (and aborted sessions), 2 bad usage.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace decisive
