#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anon/error.hpp"
#include "anon/unicode.hpp"

namespace anon {

/// Half-open interval of Unicode scalar-value offsets.
struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  constexpr std::size_t size() const noexcept { return end - start; }
  constexpr bool empty() const noexcept { return end <= start; }
  constexpr bool overlaps(const CharSpan& o) const noexcept {
    return start < o.end && o.start < end;
  }
  constexpr bool contains(const CharSpan& o) const noexcept {
    return start <= o.start && o.end <= end;
  }
  constexpr auto operator<=>(const CharSpan&) const = default;
};

enum class Language { de, fr, it };

inline constexpr std::array<Language, 3> kLanguages{Language::de, Language::fr, Language::it};

constexpr std::string_view to_string(Language l) noexcept {
  switch (l) {
    case Language::de: return "de";
    case Language::fr: return "fr";
    case Language::it: return "it";
  }
  return "de";
}

inline Language parse_language(std::string_view s) {
  if (s == "de") return Language::de;
  if (s == "fr") return Language::fr;
  if (s == "it") return Language::it;
  throw ValidationError("unsupported language '" + std::string(s) + "' (expected de, fr or it)");
}

/// Where a span came from. Also the key for merge priority.
enum class Source { gold, regex, gazetteer, conventional, model, manual, uniformized };

constexpr std::string_view to_string(Source s) noexcept {
  switch (s) {
    case Source::gold: return "gold";
    case Source::regex: return "regex";
    case Source::gazetteer: return "gazetteer";
    case Source::conventional: return "conventional";
    case Source::model: return "model";
    case Source::manual: return "manual";
    case Source::uniformized: return "uniformized";
  }
  return "gold";
}

inline Source parse_source(std::string_view s) {
  for (auto src : {Source::gold, Source::regex, Source::gazetteer, Source::conventional,
                   Source::model, Source::manual, Source::uniformized}) {
    if (to_string(src) == s) return src;
  }
  throw ValidationError("unknown span source '" + std::string(s) + "'");
}

/// Closed label inventory of a corpus.
class LabelSet {
public:
  LabelSet() = default;

  explicit LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
    for (const auto& n : names_) {
      if (n.empty()) throw InvalidConfig("label names must be non-empty");
      if (std::any_of(n.begin(), n.end(), [](char c) { return c == ' ' || c == '\t' || c == '\n'; }))
        throw InvalidConfig("label '" + n + "' contains whitespace");
    }
  }

  static LabelSet defaults() { return LabelSet({"PER", "LOC", "ORG", "MISC"}); }
  static LabelSet anonymization_only() { return LabelSet({"ANON"}); }

  bool contains(std::string_view name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
  }
  const std::vector<std::string>& names() const noexcept { return names_; }
  bool empty() const noexcept { return names_.empty(); }

  void require(std::string_view name) const {
    if (!contains(name)) throw UnknownLabel("label '" + std::string(name) + "' is not in the inventory");
  }

private:
  std::vector<std::string> names_;
};

struct EntitySpan {
  CharSpan span;
  std::string label;
  std::u32string surface;
  Source source = Source::gold;
  double confidence = 1.0;
  /// Set on gold spans that straddle a sentence boundary.
  bool cross_sentence = false;

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

/// Orders by (start, end), then label, for stable output.
inline bool span_order(const EntitySpan& a, const EntitySpan& b) {
  if (a.span != b.span) return a.span < b.span;
  return a.label < b.label;
}

inline void sort_spans(std::vector<EntitySpan>& spans) {
  std::sort(spans.begin(), spans.end(), span_order);
}

/// True if the spans, taken in sorted order, never overlap.
inline bool non_overlapping(std::vector<EntitySpan> spans) {
  sort_spans(spans);
  for (std::size_t i = 1; i < spans.size(); ++i)
    if (spans[i - 1].span.end > spans[i].span.start) return false;
  return true;
}

}  // namespace anon
