#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace flatlink::cli {

/// Exit codes: 0 success, 1 validation found violations, 2 error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitViolations = 1;
inline constexpr int kExitError = 2;

/// Entry point of the `flatlink` tool. args[0] is the program name. Reports
/// go to `out`; the effective configuration and errors go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace flatlink::cli
