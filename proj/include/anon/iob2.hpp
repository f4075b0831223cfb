#pragma once

// IOB2 encoding of entity spans over tokens, and the decoder used for
// scoring (strict B/I runs with lenient repair of orphan I- tags).

#include <compare>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "anon/error.hpp"
#include "anon/tokenize.hpp"
#include "anon/types.hpp"

namespace anon {

/// Entity over token indices [start, end).
struct TokenSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string label;

  auto operator<=>(const TokenSpan&) const = default;
};

struct Iob2Stats {
  std::size_t snapped = 0;  // entity boundaries widened to the enclosing tokens
  std::size_t dropped = 0;  // entities covering no token at all
};

/// Tags for a token sequence of length `n` from token-aligned spans.
inline std::vector<std::string> encode_iob2(std::size_t n, std::span<const TokenSpan> spans) {
  std::vector<std::string> tags(n, "O");
  for (const auto& s : spans) {
    if (s.start >= s.end || s.end > n) throw SpanOutOfBounds("token span outside sequence");
    for (std::size_t i = s.start; i < s.end; ++i) {
      if (tags[i] != "O") throw OverlapError("token spans overlap at token " + std::to_string(i));
      tags[i] = (i == s.start ? "B-" : "I-") + s.label;
    }
  }
  return tags;
}

/// Maps character-offset entities onto `tokens` (snapping outward to token
/// boundaries) and encodes them. Entities and tokens share one coordinate
/// system.
inline std::vector<TokenSpan> align_to_tokens(std::span<const Token> tokens,
                                              std::span<const EntitySpan> entities,
                                              Iob2Stats* stats = nullptr) {
  std::vector<const EntitySpan*> sorted;
  for (const auto& e : entities) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(),
            [](const EntitySpan* a, const EntitySpan* b) { return span_order(*a, *b); });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i - 1]->span.overlaps(sorted[i]->span))
      throw OverlapError("entities overlap at offset " + std::to_string(sorted[i]->span.start));
  }

  std::vector<TokenSpan> out;
  for (const EntitySpan* e : sorted) {
    auto first = std::partition_point(tokens.begin(), tokens.end(),
                                      [&](const Token& t) { return t.span.end <= e->span.start; });
    if (first == tokens.end() || first->span.start >= e->span.end) {
      if (stats) ++stats->dropped;
      continue;
    }
    auto last = std::partition_point(first, tokens.end(),
                                     [&](const Token& t) { return t.span.start < e->span.end; });
    const auto b = static_cast<std::size_t>(first - tokens.begin());
    const auto en = static_cast<std::size_t>(last - tokens.begin());
    if (stats && (first->span.start != e->span.start || (last - 1)->span.end != e->span.end))
      ++stats->snapped;
    if (!out.empty() && out.back().end > b)
      throw OverlapError("entities collide after snapping to token " + std::to_string(b));
    out.push_back({b, en, e->label});
  }
  return out;
}

inline std::vector<std::string> to_iob2(std::span<const Token> tokens,
                                        std::span<const EntitySpan> entities,
                                        Iob2Stats* stats = nullptr) {
  const auto spans = align_to_tokens(tokens, entities, stats);
  return encode_iob2(tokens.size(), spans);
}

struct DecodeStats {
  std::size_t repairs = 0;  // I- tags that had to open a new entity
};

/// Maximal B-X (I-X)* runs. An I-X that does not continue an X entity opens
/// a new one and is counted as a repair.
inline std::vector<TokenSpan> extract_spans(std::span<const std::string> tags,
                                            DecodeStats* stats = nullptr,
                                            const LabelSet* inventory = nullptr) {
  std::vector<TokenSpan> out;
  bool open = false;
  auto close = [&](std::size_t at) {
    if (open) out.back().end = at;
    open = false;
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string_view tag = tags[i];
    if (tag == "O") {
      close(i);
      continue;
    }
    if (tag.size() < 3 || tag[1] != '-' || (tag[0] != 'B' && tag[0] != 'I'))
      throw UnknownLabel("unknown tag '" + std::string(tag) + "' at position " + std::to_string(i));
    const std::string_view label = tag.substr(2);
    if (inventory) inventory->require(label);
    if (tag[0] == 'I' && open && out.back().label == label) continue;
    if (tag[0] == 'I' && stats) ++stats->repairs;
    close(i);
    out.push_back({i, i + 1, std::string(label)});
    open = true;
  }
  close(tags.size());
  return out;
}

inline std::vector<TokenSpan> extract_spans(const std::vector<std::string>& tags,
                                            DecodeStats* stats = nullptr,
                                            const LabelSet* inventory = nullptr) {
  return extract_spans(std::span<const std::string>(tags), stats, inventory);
}

}  // namespace anon
