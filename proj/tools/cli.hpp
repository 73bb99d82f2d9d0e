#pragma once

#include <string>
#include <vector>

namespace rivex::cli {

inline constexpr int kExitUsage = 2;
inline constexpr int kExitUnexpected = 1;
inline constexpr int kExitValidation = 8;  // `validate` ran but a check failed

/// Runs one subcommand; argv[0] is the program name. Returns the process exit code.
int run(const std::vector<std::string>& argv);

}  // namespace rivex::cli
