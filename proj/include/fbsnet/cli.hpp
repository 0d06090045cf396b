#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fbsnet {

/// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumeric = 2;

/// Entry point of the command-line tool. `args` excludes the program name.
/// Errors are reported as one line on `err`:
///   error kind=<usage|config|io|domain|dimension|numeric|internal> message="..."
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args);

/// Edit distance, used for flag suggestions.
std::size_t levenshtein(const std::string& a, const std::string& b);

}  // namespace fbsnet
