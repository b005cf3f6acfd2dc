#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace spiq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFormat = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitInternal = 4;

/// Runs one subcommand. `args[0]` is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spiq::cli
