#pragma once

#include <iosfwd>

namespace atpo::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitRuntimeError = 2;

/// Entry point of the command-line tool: solve, run, sweep, bound-check, export.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace atpo::harness
