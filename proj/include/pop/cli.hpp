#pragma once

// popctl command implementations. `run` is the whole program minus main(),
// so tests can drive commands in-process.
//
// Exit codes: 0 success or verified, 1 verification failure, 2 usage or
// input error. Machine output (JSON/CSV) goes to `out` and to files under
// --out; human summaries go to `err`. Each run also writes
// <out>/<command>.manifest.json recording argv, seed and input/output digests.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace pop::cli {

inline constexpr std::string_view tool_version = "0.1.0";
inline constexpr std::uint64_t default_seed = 1;
inline constexpr const char* default_out_dir = "popctl-out";

enum exit_code : int { ok = 0, verification_failed = 1, usage_error = 2 };

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Writes the sample scenarios and fixtures used by the docs and CLI tests.
std::vector<std::filesystem::path> write_sample_fixtures(const std::filesystem::path& dir, std::uint64_t seed);

}  // namespace pop::cli
