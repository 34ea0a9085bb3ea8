#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace peerloop::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitFlagged = 2;

/// Runs the operator CLI. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace peerloop::cli
