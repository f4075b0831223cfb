#pragma once

// UTF-8 <-> UTF-32 conversion and the small amount of character
// classification the tokenizer and segmenter need. Coverage is Latin-1,
// Latin Extended-A, basic Greek and Cyrillic, which is what de/fr/it rulings
// contain; everything else above U+017F that is not punctuation or space is
// treated as a letter without case.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "anon/error.hpp"

namespace anon::unicode {

inline std::u32string decode_utf8(std::string_view in) {
  std::u32string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    const auto b0 = static_cast<unsigned char>(in[i]);
    char32_t cp = 0;
    std::size_t len = 0;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      len = 4;
    } else {
      throw InvalidUtf8(i);
    }
    if (i + len > in.size()) throw InvalidUtf8(i);
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(in[i + k]);
      if ((b & 0xC0) != 0x80) throw InvalidUtf8(i + k);
      cp = (cp << 6) | (b & 0x3F);
    }
    // overlong forms, surrogates, out of range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
      throw InvalidUtf8(i);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
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

inline std::string encode_utf8(std::u32string_view in) {
  std::string out;
  out.reserve(in.size());
  for (char32_t cp : in) append_utf8(out, cp);
  return out;
}

/// UTF-8 encoding plus, for every scalar offset i in [0, n], the byte offset
/// where scalar i starts (entry n is the total byte length).
struct Utf8Index {
  std::string bytes;
  std::vector<std::size_t> byte_of_scalar;

  std::size_t scalar_of_byte(std::size_t byte) const;
};

inline Utf8Index encode_indexed(std::u32string_view in) {
  Utf8Index idx;
  idx.bytes.reserve(in.size());
  idx.byte_of_scalar.reserve(in.size() + 1);
  for (char32_t cp : in) {
    idx.byte_of_scalar.push_back(idx.bytes.size());
    append_utf8(idx.bytes, cp);
  }
  idx.byte_of_scalar.push_back(idx.bytes.size());
  return idx;
}

inline std::size_t Utf8Index::scalar_of_byte(std::size_t byte) const {
  // offsets inside a multibyte sequence round down
  auto it = std::upper_bound(byte_of_scalar.begin(), byte_of_scalar.end(), byte);
  return static_cast<std::size_t>(it - byte_of_scalar.begin()) - 1;
}

constexpr bool is_space(char32_t c) noexcept {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' || c == U'\f' ||
         c == 0x85 || c == 0xA0 || (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 ||
         c == 0x202F || c == 0x205F || c == 0x3000;
}

constexpr bool is_digit(char32_t c) noexcept { return c >= U'0' && c <= U'9'; }

constexpr bool in_latin_ext_a_upper(char32_t c) noexcept {
  if (c >= 0x100 && c <= 0x137) return c % 2 == 0;
  if (c >= 0x139 && c <= 0x148) return c % 2 == 1;
  if (c >= 0x14A && c <= 0x177) return c % 2 == 0;
  if (c == 0x178) return true;
  if (c >= 0x179 && c <= 0x17E) return c % 2 == 1;
  return false;
}

constexpr bool is_upper(char32_t c) noexcept {
  if (c >= U'A' && c <= U'Z') return true;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return true;
  if (c >= 0x100 && c <= 0x17F) return in_latin_ext_a_upper(c);
  if (c >= 0x391 && c <= 0x3A9) return true;
  if (c >= 0x400 && c <= 0x42F) return true;
  return false;
}

constexpr bool is_lower(char32_t c) noexcept {
  if (c >= U'a' && c <= U'z') return true;
  if (c >= 0xDF && c <= 0xFF && c != 0xF7) return true;
  if (c >= 0x100 && c <= 0x17F) return !in_latin_ext_a_upper(c) && c != 0x138 && c != 0x149;
  if (c >= 0x3B1 && c <= 0x3C9) return true;
  if (c >= 0x430 && c <= 0x45F) return true;
  return false;
}

constexpr bool is_punct_block(char32_t c) noexcept {
  return (c >= 0x2010 && c <= 0x2BFF) || (c >= 0x3001 && c <= 0x303F) ||
         (c >= 0xFE30 && c <= 0xFE4F) || (c >= 0xFF01 && c <= 0xFF0F);
}

constexpr bool is_alpha(char32_t c) noexcept {
  if (is_upper(c) || is_lower(c)) return true;
  if (c == 0xAA || c == 0xB5 || c == 0xBA) return true;
  if (c >= 0x180 && !is_space(c) && !is_punct_block(c)) return true;
  return false;
}

/// Letters and digits: the characters that glue into one word token.
constexpr bool is_word(char32_t c) noexcept { return is_alpha(c) || is_digit(c); }

constexpr char32_t to_lower(char32_t c) noexcept {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  if (c >= 0x100 && c <= 0x17F && in_latin_ext_a_upper(c)) return c == 0x178 ? 0xFF : c + 1;
  if (c >= 0x391 && c <= 0x3A9) return c + 32;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

inline std::u32string fold_case(std::u32string_view s) {
  std::u32string out(s);
  for (auto& c : out) c = to_lower(c);
  return out;
}

}  // namespace anon::unicode
