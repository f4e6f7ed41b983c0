#pragma once

#include <iosfwd>

namespace akriging {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitOracleMiss = 3;
inline constexpr int kExitNumerical = 4;

/// Environment variable that overrides the export directory.
inline constexpr const char* kOutputDirEnv = "AKRIGING_OUTPUT_DIR";

/// Entry point of the `akriging` command line tool:
///   init --config <path> [--force] [--experiment <path>]
///   run <exp> [--max-iter N] [--seed S]
///   step <exp>
///   append <exp> --m <v> --k <v> --response <v>
///   report <exp> [--alpha A]
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace akriging
