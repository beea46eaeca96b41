#pragma once

#include <iosfwd>

namespace mpdse::cli {

/// Exit codes: 0 success, 1 simulation mismatch, 2 configuration error or
/// infeasible constraints.
inline constexpr int kExitOk = 0;
inline constexpr int kExitMismatch = 1;
inline constexpr int kExitConfig = 2;

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mpdse::cli
