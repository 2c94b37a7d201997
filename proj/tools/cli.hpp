#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace retina::cli {

// Exit codes shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kReject = 1;
inline constexpr int kInputError = 2;
inline constexpr int kEmptyGallery = 3;

// Runs one invocation. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace retina::cli
