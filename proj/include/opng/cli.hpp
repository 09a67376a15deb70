#pragma once

#include <iosfwd>

namespace opng::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Entry point behind the `opngram` binary; streams are injectable so tests
// can drive subcommands in-process.
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace opng::cli
