#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace flakysieve::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitRuntime = 3;
inline constexpr int kExitConfig = 4;

// Runs one command line (without the program name). Diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flakysieve::cli
