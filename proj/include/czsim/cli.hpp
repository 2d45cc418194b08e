#pragma once

#include <ostream>

namespace czsim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the command-line tool. Errors are reported on `err` as a
/// single JSON line {"error": <code>, "message": <text>}.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace czsim
