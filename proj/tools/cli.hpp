#pragma once

#include <ostream>

namespace tc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;     // validation errors, non-success replies
inline constexpr int kExitTransport = 2;  // server unreachable
inline constexpr int kExitUsage = 64;

/// Runs the `tc` command line. Long-running subcommands (server, gateway,
/// sim) block until SIGINT or SIGTERM.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tc::cli
