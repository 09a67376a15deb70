#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace opng {

using WordId = std::uint32_t;

inline constexpr WordId kNoWord = std::numeric_limits<WordId>::max();

// Reserved vocabulary entries. Their IDs are fixed at the front of every
// vocabulary, in this order.
enum class Tag : WordId { SentenceStart = 0, SentenceEnd = 1, Unknown = 2, Blacklisted = 3 };

inline constexpr std::size_t kNumTags = 4;
inline constexpr std::array<std::string_view, kNumTags> kTagSurface = {"<s>", "<e>", "<unk>", "<bad>"};

inline constexpr WordId id_of(Tag t) noexcept { return static_cast<WordId>(t); }
inline constexpr std::string_view surface(Tag t) noexcept { return kTagSurface[id_of(t)]; }

inline constexpr bool is_tag_id(WordId id) noexcept { return id < kNumTags; }

inline constexpr bool is_tag(std::string_view word) noexcept {
  for (auto s : kTagSurface)
    if (s == word) return true;
  return false;
}

}  // namespace opng
