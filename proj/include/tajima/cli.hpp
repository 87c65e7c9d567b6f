#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "tajima/diagnostics.hpp"

namespace tajima {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

auto run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) -> int;

// Median line and 95% ribbon on a log-scaled y axis; truth drawn dashed when given.
auto render_svg(const TrajectorySummary& s, const std::vector<double>& truth = {},
                const std::string& title = {}) -> std::string;

auto metadata_line(const std::string& command, std::uint64_t config_hash, std::uint64_t seed)
    -> std::string;

}  // namespace tajima
