// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace matid::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitUnresolved = 2;  // contradiction or no-hypothesis outcome

/// Runs one command line (args excludes the program name). Results go to
/// `out` unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "start:stop:step" (inclusive), a comma list, or a single value.
std::vector<double> parse_grid(const std::string& text);

}  // namespace matid::cli
