#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared across modules.
namespace cellbench::text {

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);
std::vector<std::string> split_whitespace(std::string_view s);
bool starts_with_icase(std::string_view s, std::string_view prefix) noexcept;
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace cellbench::text
