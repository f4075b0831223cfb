#pragma once

// Word tokenizer shared by dataset preparation, detectors, the uniformizer
// and the evaluator: runs of letters/digits form one token, every other
// non-space character is its own token, except anonymized-party placeholders
// ("A.", "A.________") which stay whole.

#include <string>
#include <string_view>
#include <vector>

#include "anon/types.hpp"
#include "anon/unicode.hpp"

namespace anon {

struct Token {
  std::u32string text;
  CharSpan span;

  friend bool operator==(const Token&, const Token&) = default;
};

/// Tokenizes text[range) and reports spans in the coordinates of `text`.
inline std::vector<Token> tokenize(std::u32string_view text, CharSpan range) {
  using unicode::is_word;
  std::vector<Token> out;
  std::size_t i = range.start;
  const std::size_t n = std::min(range.end, text.size());
  auto emit = [&](std::size_t b, std::size_t e) {
    out.push_back({std::u32string(text.substr(b, e - b)), {b, e}});
  };
  while (i < n) {
    const char32_t c = text[i];
    if (unicode::is_space(c)) {
      ++i;
      continue;
    }
    if (c >= U'A' && c <= U'Z' && (i == range.start || !is_word(text[i - 1])) && i + 1 < n &&
        text[i + 1] == U'.') {
      std::size_t j = i + 2;
      while (j < n && text[j] == U'_') ++j;
      if (j - (i + 2) == 1) j = i + 2;
      emit(i, j);
      i = j;
      continue;
    }
    if (is_word(c)) {
      std::size_t j = i;
      while (j < n && is_word(text[j])) ++j;
      emit(i, j);
      i = j;
      continue;
    }
    emit(i, i + 1);
    ++i;
  }
  return out;
}

inline std::vector<Token> tokenize(std::u32string_view text) {
  return tokenize(text, CharSpan{0, text.size()});
}

/// Token start/end lookup for whole-token matching over one text.
class TokenBoundaries {
public:
  TokenBoundaries() = default;
  TokenBoundaries(const std::vector<Token>& tokens, std::size_t text_size)
      : starts_(text_size + 1, false), ends_(text_size + 1, false) {
    for (const auto& t : tokens) {
      starts_[t.span.start] = true;
      ends_[t.span.end] = true;
    }
  }

  bool is_start(std::size_t pos) const { return pos < starts_.size() && starts_[pos]; }
  bool is_end(std::size_t pos) const { return pos < ends_.size() && ends_[pos]; }

private:
  std::vector<bool> starts_;
  std::vector<bool> ends_;
};

/// Every occurrence of `needle` in `text` that begins at a token start and
/// ends at a token end. Occurrences may overlap each other.
inline std::vector<CharSpan> find_whole_token(std::u32string_view text, const TokenBoundaries& bounds,
                                              std::u32string_view needle) {
  std::vector<CharSpan> out;
  if (needle.empty()) return out;
  for (auto pos = text.find(needle); pos != std::u32string_view::npos; pos = text.find(needle, pos + 1)) {
    const std::size_t end = pos + needle.size();
    if (bounds.is_start(pos) && bounds.is_end(end)) out.push_back({pos, end});
  }
  return out;
}

}  // namespace anon
