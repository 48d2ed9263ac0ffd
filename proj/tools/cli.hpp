#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sjd::cli {

// Exit codes: 0 success / gate passed, 1 runtime error or gate failed,
// 2 usage or configuration error.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sjd::cli
