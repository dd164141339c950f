#pragma once

namespace pwe::cli {

inline constexpr unsigned long long kDefaultSeed = 1;
inline constexpr long kDefaultBudget = 3000;

// Entry point behind the pwesim binary; returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace pwe::cli
