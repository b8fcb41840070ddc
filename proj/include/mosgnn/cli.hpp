#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace mosgnn {

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitUsage = 2, kExitCheckpoint = 3 };

/// Parses a plain-text config file of `key = value` lines ('#' starts a
/// comment) into flag/value pairs keyed by long flag name.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

/// Entry point for the command-line tool; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mosgnn
