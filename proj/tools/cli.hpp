#pragma once

#include <iosfwd>

namespace cardionet {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerificationFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

/// Entry point behind the `cardionet` executable. Subcommands: train, eval,
/// predict, gradcheck, ablation, synth, augment.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cardionet
