#pragma once

#include <string>
#include <vector>

namespace videogan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitThreshold = 3;

// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "VIDEOGAN_OUTPUT_ROOT";

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace videogan::cli
