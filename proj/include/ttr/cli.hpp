#pragma once

#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace ttr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs one subcommand. `args` excludes the program name. Human-readable
/// logs go to `out`, errors to `err`; structured results only to --out paths.
int run_command(std::span<const std::string> args, std::ostream& out, std::ostream& err);

/// Flat key=value settings with optional [subcommand] sections. Keys inside
/// a section are stored as "section.key".
std::map<std::string, std::string> parse_config(std::string_view text);

}  // namespace ttr::cli
