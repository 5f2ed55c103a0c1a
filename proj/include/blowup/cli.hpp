#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace blowup::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitInconclusive = 2;

/// Runs one command line (without the program name). Results go to --out
/// or `out`; messages and usage text go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace blowup::cli
