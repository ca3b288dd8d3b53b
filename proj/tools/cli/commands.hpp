#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace residpo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

inline constexpr const char* kToolVersion = "0.1.0";

/// Runs one CLI invocation (args[0] is the program name) and returns its exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace residpo::cli
