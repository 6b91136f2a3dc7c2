#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gdfm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

/// Parses arguments (without the program name), runs the command and returns
/// the process exit code. Failures leave an error.json in the output
/// directory when one could be resolved.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gdfm::cli
