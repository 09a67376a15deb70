#include "opng/utf8.hpp"

namespace opng::utf8 {

std::optional<char32_t> decode(std::string_view s, std::size_t pos, std::size_t& len) noexcept {
  len = 1;
  if (pos >= s.size()) return std::nullopt;
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) return b0;

  std::size_t need;
  char32_t cp;
  char32_t min;
  if ((b0 & 0xE0) == 0xC0) {
    need = 1, cp = b0 & 0x1F, min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    need = 2, cp = b0 & 0x0F, min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    need = 3, cp = b0 & 0x07, min = 0x10000;
  } else {
    return std::nullopt;
  }
  if (pos + need >= s.size()) return std::nullopt;
  for (std::size_t i = 1; i <= need; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) return std::nullopt;
    cp = (cp << 6) | (b & 0x3F);
  }
  // overlong, surrogate, out of range
  if (cp < min || (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) return std::nullopt;
  len = need + 1;
  return cp;
}

void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::size_t sanitize(std::string_view in, std::string& out) {
  std::size_t bad = 0;
  out.reserve(out.size() + in.size());
  for (std::size_t pos = 0; pos < in.size();) {
    std::size_t len;
    if (decode(in, pos, len)) {
      out.append(in.substr(pos, len));
    } else {
      append(out, kReplacement);
      ++bad;
    }
    pos += len;
  }
  return bad;
}

std::size_t length(std::string_view s) noexcept {
  std::size_t n = 0;
  for (std::size_t pos = 0; pos < s.size(); ++n) {
    std::size_t len;
    decode(s, pos, len);
    pos += len;
  }
  return n;
}

std::optional<char32_t> first(std::string_view s) noexcept {
  std::size_t len;
  return decode(s, 0, len);
}

std::size_t prefix_bytes(std::string_view s, std::size_t n) noexcept {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n && pos < s.size(); ++i) {
    std::size_t len;
    decode(s, pos, len);
    pos += len;
  }
  return pos;
}

}  // namespace opng::utf8
