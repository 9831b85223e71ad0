#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ipnet {

/// Whole-token parse; nullopt on trailing garbage or an empty token.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

/// Shortest "%.17g" rendering; parses back to the identical double.
std::string format_double(double value);

std::string trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);

}  // namespace ipnet
