#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace s2plume {

inline constexpr const char* kVersion = "0.3.0";

// Runs one CLI invocation. Exit codes: 0 success, 1 usage error, 2 data or
// invariant error. Every successful run writes a RunRecord JSON next to its
// outputs.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace s2plume
