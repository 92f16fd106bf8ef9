#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace permlab::cli {

// Bare invocations stay reproducible: every stochastic subcommand uses this
// seed unless --seed overrides it.
inline constexpr std::uint64_t kDefaultSeed = 1729;

inline constexpr const char* kSchema = "permuton-lab/1";

// Runs one invocation. args excludes the program name. Final JSON goes to
// out; progress and diagnostics go to err. Returns the process exit code:
// 0 success, 1 usage or input error, 2 search/experiment failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace permlab::cli
