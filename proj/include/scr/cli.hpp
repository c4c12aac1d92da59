#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace scr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;  // usage or config error
inline constexpr int kExitData = 2;   // missing or invalid data

// Environment variable consulted when --data is omitted.
inline constexpr const char* kDataDirEnv = "SCR_DATA_DIR";

// Runs `scr <args...>` (args excludes the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scr::cli
