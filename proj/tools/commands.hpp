#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace texgs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Runs the command-line interface in-process. `args` excludes the program name.
/// Returns the process exit code: 0 success, 2 validation or I/O failure, 3 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace texgs::cli
