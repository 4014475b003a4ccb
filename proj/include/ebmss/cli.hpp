#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ebmss {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitInput = 2;

/// Entry point for the `ebmss` command. `args` excludes the program name.
/// Subcommands: sync, fit, simulate, project, diagnose, generate.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ebmss
