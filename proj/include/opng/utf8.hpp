#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace opng::utf8 {

inline constexpr char32_t kReplacement = 0xFFFD;

// Decodes one scalar value at s[pos]. Returns nullopt for an invalid or
// truncated sequence; `len` receives the number of bytes consumed (1 on error).
std::optional<char32_t> decode(std::string_view s, std::size_t pos, std::size_t& len) noexcept;

void append(std::string& out, char32_t cp);

// Copies `in`, replacing each invalid byte with U+FFFD. Returns the number of
// replacements.
std::size_t sanitize(std::string_view in, std::string& out);

// Number of scalar values in a valid UTF-8 string.
std::size_t length(std::string_view s) noexcept;

// First scalar value, or nullopt for an empty/invalid string.
std::optional<char32_t> first(std::string_view s) noexcept;

// Byte length of the first `n` scalar values.
std::size_t prefix_bytes(std::string_view s, std::size_t n) noexcept;

}  // namespace opng::utf8
