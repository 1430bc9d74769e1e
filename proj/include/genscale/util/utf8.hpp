#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

namespace genscale::util {

// Character offsets in corpus files count Unicode code points, not bytes.

inline std::size_t codepoint_count(std::string_view text) {
  std::size_t count = 0;
  for (unsigned char c : text)
    if ((c & 0xC0) != 0x80) ++count;
  return count;
}

/// Byte offset of the code point at `index`; index == count maps to size().
inline std::optional<std::size_t> byte_offset(std::string_view text, std::size_t index) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) == 0x80) continue;
    if (seen == index) return i;
    ++seen;
  }
  if (seen == index) return text.size();
  return std::nullopt;
}

/// Substring by code-point range [start, end).
inline std::string_view codepoint_slice(std::string_view text, std::size_t start,
                                        std::size_t end) {
  auto b = byte_offset(text, start);
  auto e = byte_offset(text, end);
  if (!b || !e || *e < *b) return {};
  return text.substr(*b, *e - *b);
}

}  // namespace genscale::util
