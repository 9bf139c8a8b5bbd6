#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace critex::text {

// ASCII-only case folding; bytes >= 0x80 pass through untouched.
std::string to_lower(std::string_view s);

std::string_view trim(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Lowercase, collapse internal whitespace to single spaces, strip leading and
// trailing punctuation/whitespace. Used for every knowledge-base key and every
// surface that is compared against one.
std::string normalize_name(std::string_view s);

// Unicode code points of a UTF-8 string. Invalid bytes decode as U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view s);

// Length in bytes of the UTF-8 sequence starting at s[pos] (1 for invalid).
std::size_t utf8_length(std::string_view s, std::size_t pos);

bool is_punctuation(char32_t cp);

// Parses a decimal number, allowing an optional leading sign. Rejects
// trailing garbage.
std::optional<double> parse_double(std::string_view s);

// Shortest representation that round-trips through parse_double.
std::string format_double(double v);

// Rounds to 12 significant digits; strips floating noise introduced by
// unit-conversion factors such as 1/12.
double snap(double v);

}  // namespace critex::text
