#pragma once

#include <ostream>

namespace moenet {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;       // bad flags or config
inline constexpr int kExitInfeasible = 3;  // no cell met its SLO

// Entry point of the moenet tool; writes reports under the output
// directory (--out, else $MOENET_OUT_DIR, else ./out).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace moenet
