#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tajima {

// Minimal CSV: comma separated, optional double quotes, '#' comment lines skipped.
auto parse_csv(const std::string& text) -> std::vector<std::vector<std::string>>;
auto format_double(double v) -> std::string;  // %.17g

auto read_file(const std::string& path) -> std::string;
void write_file(const std::string& path, const std::string& content);

auto fnv1a64(const std::string& s) -> std::uint64_t;
auto hex64(std::uint64_t v) -> std::string;

}  // namespace tajima
