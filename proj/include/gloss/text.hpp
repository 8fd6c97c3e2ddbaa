#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gloss::text {

std::string_view trim(std::string_view s) noexcept;

bool is_valid_utf8(std::string_view s) noexcept;

/// Longest prefix of `s` holding at most `max_code_points` UTF-8 code points.
std::string_view utf8_prefix(std::string_view s, std::size_t max_code_points) noexcept;

std::string join(const std::vector<std::string>& parts, std::string_view separator);

}  // namespace gloss::text
