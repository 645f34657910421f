#pragma once

#include <iosfwd>

namespace weaktomo {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;      // scheme error (NotPrime, VanishingOverlap, ...)
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitValidity = 3;     // report written, validity flags tripped

/// weaktomo-cli <reconstruct|optimality-scan|mub|error-volume> --config PATH
///              [--seed U64] [--format json|csv] [--out PATH]
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace weaktomo
