#pragma once

#include <string>
#include <vector>

namespace apiaudit::cli {

/// Exit codes: 0 success/pass, 1 operational error, 2 audit verdict "avoid",
/// 64 usage error.
inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitAvoid = 2;
inline constexpr int kExitUsage = 64;

/// Dispatches one invocation. args excludes the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace apiaudit::cli
