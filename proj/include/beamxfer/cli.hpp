#pragma once

#include <string_view>

namespace beamxfer::cli {

inline constexpr std::string_view kToolVersion = "1.0.0";

// Entry point of the beamxfer tool. Returns the process exit code; failures
// print a JSON error record on stderr.
int run(int argc, const char* const* argv);

}  // namespace beamxfer::cli
