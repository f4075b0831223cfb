#pragma once

// Placeholder assignment and rendering of the anonymized text.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "anon/corpus.hpp"
#include "anon/error.hpp"
#include "anon/tokenize.hpp"

namespace anon {

enum class PlaceholderPolicy { letters, label_numbered, custom };

inline std::string_view to_string(PlaceholderPolicy p) noexcept {
  switch (p) {
    case PlaceholderPolicy::letters: return "letters";
    case PlaceholderPolicy::label_numbered: return "label_numbered";
    case PlaceholderPolicy::custom: return "custom";
  }
  return "letters";
}

inline PlaceholderPolicy parse_placeholder_policy(std::string_view s) {
  if (s == "letters") return PlaceholderPolicy::letters;
  if (s == "label_numbered") return PlaceholderPolicy::label_numbered;
  if (s == "custom") return PlaceholderPolicy::custom;
  throw ValidationError("unknown placeholder policy '" + std::string(s) + "'");
}

/// Surface -> placeholder, injective, iterated in insertion order.
class ReplacementMap {
public:
  ReplacementMap() = default;
  explicit ReplacementMap(PlaceholderPolicy policy) : policy_(policy) {}

  PlaceholderPolicy policy() const noexcept { return policy_; }
  const std::vector<std::pair<std::u32string, std::u32string>>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  const std::u32string* find(const std::u32string& surface) const {
    auto it = by_surface_.find(surface);
    return it == by_surface_.end() ? nullptr : &entries_[it->second].second;
  }
  /// Insertion index of `surface` (the surface id used in exports).
  std::size_t id_of(const std::u32string& surface) const {
    auto it = by_surface_.find(surface);
    if (it == by_surface_.end()) throw MissingReplacement("no replacement for surface");
    return it->second;
  }
  bool uses_placeholder(const std::u32string& placeholder) const {
    return placeholders_.count(placeholder) > 0;
  }

  void insert(std::u32string surface, std::u32string placeholder) {
    if (by_surface_.count(surface)) throw ValidationError("surface already mapped");
    if (placeholders_.count(placeholder)) throw ValidationError("placeholder already in use");
    if (placeholder.empty()) throw ValidationError("empty placeholder");
    by_surface_.emplace(surface, entries_.size());
    placeholders_.insert(placeholder);
    entries_.emplace_back(std::move(surface), std::move(placeholder));
  }

  friend bool operator==(const ReplacementMap& a, const ReplacementMap& b) {
    return a.policy_ == b.policy_ && a.entries_ == b.entries_;
  }

private:
  PlaceholderPolicy policy_ = PlaceholderPolicy::letters;
  std::vector<std::pair<std::u32string, std::u32string>> entries_;
  std::map<std::u32string, std::size_t> by_surface_;
  std::set<std::u32string> placeholders_;
};

/// Bijective base-26: 0 -> "A", 25 -> "Z", 26 -> "AA", 27 -> "AB", ...
inline std::u32string party_letters(std::size_t k) {
  std::u32string out;
  ++k;
  while (k > 0) {
    --k;
    out.insert(out.begin(), static_cast<char32_t>(U'A' + k % 26));
    k /= 26;
  }
  return out;
}

inline std::u32string letter_placeholder(std::size_t k) { return party_letters(k) + U".________"; }

namespace detail {

/// True when `placeholder` occurs as whole tokens somewhere outside the
/// spans that are about to be replaced.
inline bool collides(const Document& doc, const TokenBoundaries& bounds, const std::vector<EntitySpan>& accepted,
                     const std::u32string& placeholder) {
  for (const auto& hit : find_whole_token(doc.text, bounds, placeholder)) {
    const bool inside = std::any_of(accepted.begin(), accepted.end(),
                                    [&](const EntitySpan& a) { return a.span.contains(hit); });
    if (!inside) return true;
  }
  return false;
}

}  // namespace detail

/// One placeholder per distinct surface, in first-occurrence order. A
/// placeholder that already appears in the remaining text, or that a
/// custom table assigns twice, gets a "-2", "-3", ... suffix.
inline ReplacementMap assign_placeholders(const Document& doc, std::vector<EntitySpan> accepted,
                                          PlaceholderPolicy policy,
                                          const std::map<std::u32string, std::u32string>& custom = {},
                                          std::vector<std::string>* warnings = nullptr) {
  sort_spans(accepted);
  ReplacementMap map(policy);
  const TokenBoundaries bounds(tokenize(doc.text), doc.text.size());
  std::size_t next_letter = 0;
  std::map<std::string, std::size_t> per_label;

  auto dedupe = [&](std::u32string base) {
    std::u32string candidate = base;
    for (std::size_t k = 2; map.uses_placeholder(candidate) || detail::collides(doc, bounds, accepted, candidate); ++k) {
      const auto suffix = U"-" + unicode::decode_utf8(std::to_string(k));
      candidate = base + suffix;
    }
    return candidate;
  };

  for (const auto& s : accepted) {
    if (map.find(s.surface)) continue;
    std::u32string placeholder;
    if (policy == PlaceholderPolicy::custom) {
      if (auto it = custom.find(s.surface); it != custom.end() && !it->second.empty()) {
        placeholder = it->second;
        if (map.uses_placeholder(placeholder) && warnings)
          warnings->push_back("replacement '" + unicode::encode_utf8(placeholder) +
                              "' requested for two surfaces; numbering the second");
      }
    }
    if (placeholder.empty() && policy == PlaceholderPolicy::label_numbered) {
      const auto k = ++per_label[s.label];
      placeholder = U"⟨" + unicode::decode_utf8(s.label + "_" + std::to_string(k)) + U"⟩";
    }
    if (placeholder.empty()) placeholder = letter_placeholder(next_letter++);
    map.insert(s.surface, dedupe(std::move(placeholder)));
  }
  return map;
}

struct Replacement {
  CharSpan original;
  CharSpan replaced;
  std::size_t surface_id = 0;
  std::u32string surface;
  std::u32string placeholder;
  std::string label;
  std::string status = "accepted";
};

struct AnonymizedDocument {
  std::string doc_id;
  std::u32string text;
  std::vector<Replacement> replacements;  // in document order
};

/// Replaces each accepted span with its placeholder. The returned offset
/// table maps every original span to its position in the output.
inline AnonymizedDocument render(const Document& doc, std::vector<EntitySpan> accepted, const ReplacementMap& map) {
  sort_spans(accepted);
  for (std::size_t i = 1; i < accepted.size(); ++i)
    if (accepted[i - 1].span.end > accepted[i].span.start) throw OverlapError("accepted spans overlap");

  AnonymizedDocument out;
  out.doc_id = doc.id;
  out.text = doc.text;
  for (const auto& s : accepted) {
    if (s.span.end > doc.text.size()) throw SpanOutOfBounds("accepted span outside document");
    if (!map.find(s.surface))
      throw MissingReplacement("no replacement for '" + unicode::encode_utf8(s.surface) + "'");
  }
  // right to left so earlier offsets stay valid
  for (auto it = accepted.rbegin(); it != accepted.rend(); ++it)
    out.text.replace(it->span.start, it->span.size(), *map.find(it->surface));

  long long shift = 0;
  for (const auto& s : accepted) {
    const auto& ph = *map.find(s.surface);
    Replacement r;
    r.original = s.span;
    r.replaced.start = static_cast<std::size_t>(static_cast<long long>(s.span.start) + shift);
    r.replaced.end = r.replaced.start + ph.size();
    r.surface_id = map.id_of(s.surface);
    r.surface = s.surface;
    r.placeholder = ph;
    r.label = s.label;
    shift += static_cast<long long>(ph.size()) - static_cast<long long>(s.span.size());
    out.replacements.push_back(std::move(r));
  }
  return out;
}

/// Inverse of render(): puts the original surfaces back.
inline std::u32string restore(const AnonymizedDocument& anon) {
  std::u32string text = anon.text;
  for (auto it = anon.replacements.rbegin(); it != anon.replacements.rend(); ++it)
    text.replace(it->replaced.start, it->replaced.size(), it->surface);
  return text;
}

inline std::string html_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

/// HTML fragment with each replaced span wrapped in a <mark> carrying
/// data-surface-id and data-status.
inline std::string export_html(const AnonymizedDocument& anon) {
  std::string body;
  std::size_t pos = 0;
  for (const auto& r : anon.replacements) {
    body += html_escape(unicode::encode_utf8(std::u32string_view(anon.text).substr(pos, r.replaced.start - pos)));
    body += "<mark class=\"anon anon-" + html_escape(r.status) + "\" data-surface-id=\"" +
            std::to_string(r.surface_id) + "\" data-status=\"" + html_escape(r.status) + "\" data-label=\"" +
            html_escape(r.label) + "\">";
    body += html_escape(unicode::encode_utf8(r.placeholder));
    body += "</mark>";
    pos = r.replaced.end;
  }
  body += html_escape(unicode::encode_utf8(std::u32string_view(anon.text).substr(pos)));
  return "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>" + html_escape(anon.doc_id) +
         "</title></head>\n<body><pre class=\"ruling\">" + body + "</pre></body></html>\n";
}

}  // namespace anon
