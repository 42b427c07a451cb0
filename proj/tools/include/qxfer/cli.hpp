#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace qxfer::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

/// Runs the command line (without the program name) and returns the exit
/// code. Diagnostics go to stderr.
int run(const std::vector<std::string>& args);

/// `key = value` lines; `#` starts a comment. Keys are normalized to use
/// dashes. Throws DataError on a line without '='.
std::map<std::string, std::string> parse_config(const std::string& text);

/// Appends options from the file named by --config for every key that is
/// not already given on the command line.
std::vector<std::string> apply_config(const std::vector<std::string>& args);

}  // namespace qxfer::cli
