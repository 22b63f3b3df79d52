#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tpsl::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 1;
inline constexpr int kDataError = 2;

// Entry point of the `tpsl` tool. A path of "-" reads `in` or writes `out`.
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out,
        std::ostream& err);

// Convenience overload; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace tpsl::cli
