#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mcinr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitDiverged = 4;

/// Runs one `mcinr` command. `args` excludes the program name. Machine
/// output goes to `out`, diagnostics and progress to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mcinr::cli
