#pragma once

// Batch command-line front end. Exit codes: 0 success, 1 runtime failure,
// 2 usage or configuration error.

#include <ostream>
#include <string>
#include <vector>

namespace stackgame {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stackgame
