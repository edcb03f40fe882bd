#pragma once

#include <iosfwd>

namespace idil::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;    // bad arguments or configuration
inline constexpr int kExitRuntime = 3;  // data or numerical failure

// Entry point for `idil-ood <synth|train|eval|sweep-batch|analyze> ...`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace idil::cli
