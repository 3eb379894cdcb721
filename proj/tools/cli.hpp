#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stegcost::cli {

/// Exit codes: 0 success, 1 domain error, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// The `stegcost` command line; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stegcost::cli
