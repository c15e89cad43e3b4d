#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sigtrade::cli {

/// Exit codes: 0 success, 2 configuration error, 3 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

} // namespace sigtrade::cli
