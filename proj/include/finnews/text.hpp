#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace finnews {

using Date = std::chrono::year_month_day;

// Accepts "YYYY-MM-DD", optionally followed by a time part ("T..." or " ...").
std::optional<Date> parse_date(std::string_view text);
std::string format_date(const Date& date);

// Collapses whitespace runs (ASCII and Unicode spaces) to a single space,
// removes control characters and invalid UTF-8 bytes, trims both ends.
// Idempotent and never lengthens its input.
std::string clean_text(std::string_view raw);

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
bool iequals_ascii(std::string_view a, std::string_view b);
bool istarts_with_ascii(std::string_view s, std::string_view prefix);

// Number of UTF-8 code points; stray continuation bytes count as one each.
std::size_t utf8_length(std::string_view s);

std::uint64_t fnv1a64(std::string_view s, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t splitmix64(std::uint64_t x);
std::string hex64(std::uint64_t v);

std::string sha256_hex(std::string_view data);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
std::optional<double> parse_double(std::string_view s);

}  // namespace finnews
