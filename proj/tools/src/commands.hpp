#pragma once

namespace dirclip::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Parses arguments, runs one subcommand and maps failures to exit codes.
int run_cli(int argc, const char* const* argv);

}  // namespace dirclip::cli
