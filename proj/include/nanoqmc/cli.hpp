#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace nanoqmc {

inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitNumerical = 3,
};

// Entry point of the command-line tool; args excludes the program name.
// Data goes to files under --out, progress and warnings to `log`.
int run_cli(const std::vector<std::string>& args, std::ostream& log);

std::string sha256_hex(std::string_view data);

}  // namespace nanoqmc
