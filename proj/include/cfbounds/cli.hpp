#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cfb::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kSolveError = 1;
inline constexpr int kInputError = 2;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

// "6" or "4..8".
std::vector<std::size_t> parse_range(const std::string& s);
// "20" means seeds 1..20; "3,7" and "5..9" are explicit lists.
std::vector<std::uint64_t> parse_seeds(const std::string& s);

}  // namespace cfb::cli
