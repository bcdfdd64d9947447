#pragma once

#include <iosfwd>

namespace matchkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

/// Parses argv, runs one subcommand, writes result JSON to `out` and error
/// JSON to `err`. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace matchkit::cli
