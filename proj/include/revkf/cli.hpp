#pragma once

// Command-line front end: generate | run | sweep.
//
// Exit codes: 0 success, 1 runtime or filter error, 2 usage or config error.

#include <ostream>
#include <string>
#include <vector>

namespace revkf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace revkf::cli
