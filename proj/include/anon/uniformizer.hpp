#pragma once

// Document-wide propagation of detected surfaces: every whole-token
// occurrence of a detected surface gets a span of the same label.

#include <map>
#include <string>
#include <vector>

#include "anon/corpus.hpp"
#include "anon/detectors.hpp"
#include "anon/tokenize.hpp"

namespace anon {

struct UniformizeConfig {
  bool case_sensitive = true;
  bool whole_token = true;
  std::size_t min_surface_len = 2;
  std::size_t max_ngram = 6;  // longer surfaces fall back to a linear scan

  void validate() const {
    if (min_surface_len < 1) throw InvalidConfig("min_surface_len must be at least 1");
    if (max_ngram < 1) throw InvalidConfig("max_ngram must be at least 1");
  }
};

/// Token n-gram (n <= max_n) -> token start indices, built in one scan.
class SurfaceIndex {
public:
  explicit SurfaceIndex(const Document& doc, std::size_t max_n = 6, bool case_sensitive = true)
      : tokens_(tokenize(doc.text)), max_n_(max_n), case_sensitive_(case_sensitive) {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      std::u32string key;
      for (std::size_t n = 1; n <= max_n_ && i + n <= tokens_.size(); ++n) {
        if (n > 1) key.push_back(kSeparator);
        key += normalize(tokens_[i + n - 1].text);
        index_[key].push_back(i);
      }
    }
  }

  const std::vector<Token>& tokens() const noexcept { return tokens_; }
  std::size_t max_n() const noexcept { return max_n_; }
  std::size_t size() const noexcept { return index_.size(); }

  /// Token start positions of `sequence`; empty when longer than max_n.
  std::vector<std::size_t> occurrences(const std::vector<std::u32string>& sequence) const {
    if (sequence.empty() || sequence.size() > max_n_) return {};
    auto it = index_.find(key_of(sequence));
    return it == index_.end() ? std::vector<std::size_t>{} : it->second;
  }

  /// Same lookup for sequences of any length (linear scan past max_n).
  std::vector<std::size_t> find(const std::vector<std::u32string>& sequence) const {
    if (sequence.size() <= max_n_) return occurrences(sequence);
    std::vector<std::u32string> norm;
    for (const auto& s : sequence) norm.push_back(normalize(s));
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i + norm.size() <= tokens_.size(); ++i) {
      bool ok = true;
      for (std::size_t k = 0; k < norm.size() && ok; ++k) ok = normalize(tokens_[i + k].text) == norm[k];
      if (ok) out.push_back(i);
    }
    return out;
  }

  std::u32string key_of(const std::vector<std::u32string>& sequence) const {
    std::u32string key;
    for (std::size_t k = 0; k < sequence.size(); ++k) {
      if (k > 0) key.push_back(kSeparator);
      key += normalize(sequence[k]);
    }
    return key;
  }

  std::u32string normalize(std::u32string_view s) const {
    return case_sensitive_ ? std::u32string(s) : unicode::fold_case(s);
  }

private:
  static constexpr char32_t kSeparator = 0x1F;
  std::vector<Token> tokens_;
  std::size_t max_n_;
  bool case_sensitive_;
  std::map<std::u32string, std::vector<std::size_t>> index_;
};

inline SurfaceIndex surface_index(const Document& doc, std::size_t max_n = 6, bool case_sensitive = true) {
  return SurfaceIndex(doc, max_n, case_sensitive);
}

/// Input spans are kept verbatim; every further occurrence of a detected
/// surface (length >= min_surface_len) is added with source=uniformized.
/// Overlapping candidates are resolved by the originating detection's merge
/// priority, then longer surface, then earlier start.
inline std::vector<EntitySpan> uniformize(const Document& doc, const std::vector<EntitySpan>& spans,
                                          const UniformizeConfig& cfg = {}, const MergePolicy& policy = {}) {
  cfg.validate();
  if (!non_overlapping(spans)) throw OverlapError("uniformize expects non-overlapping spans");
  if (spans.empty()) return {};

  const SurfaceIndex index(doc, cfg.max_ngram, cfg.case_sensitive);
  const auto& tokens = index.tokens();

  struct Origin {
    int rank;
    std::size_t start;
    const EntitySpan* span;
    std::vector<std::u32string> sequence;
  };
  std::map<std::u32string, Origin> surfaces;  // normalized key -> best detection
  for (const auto& s : spans) {
    if (s.surface.size() < cfg.min_surface_len) continue;
    std::vector<std::u32string> seq;
    std::u32string key;
    if (cfg.whole_token) {
      for (const auto& t : tokenize(s.surface)) seq.push_back(t.text);
      if (seq.empty()) continue;
      key = index.key_of(seq);
    } else {
      key = index.normalize(s.surface);
    }
    Origin o{policy.rank_of(s.source), s.span.start, &s, std::move(seq)};
    auto it = surfaces.find(key);
    if (it == surfaces.end())
      surfaces.emplace(key, std::move(o));
    else if (std::tie(o.rank, o.start) < std::tie(it->second.rank, it->second.start))
      it->second = std::move(o);
  }

  struct Candidate {
    int rank;
    EntitySpan span;
  };
  std::vector<Candidate> candidates;
  const std::u32string folded_text = cfg.case_sensitive ? std::u32string() : unicode::fold_case(doc.text);
  const std::u32string_view haystack = cfg.case_sensitive ? std::u32string_view(doc.text) : folded_text;
  for (const auto& [key, origin] : surfaces) {
    std::vector<CharSpan> hits;
    if (cfg.whole_token) {
      const auto n = origin.sequence.size();
      for (auto i : index.find(origin.sequence)) hits.push_back({tokens[i].span.start, tokens[i + n - 1].span.end});
    } else {
      for (auto pos = haystack.find(key); pos != std::u32string_view::npos; pos = haystack.find(key, pos + 1))
        hits.push_back({pos, pos + key.size()});
    }
    for (const auto& h : hits)
      candidates.push_back({origin.rank, make_span(doc, h, origin.span->label, Source::uniformized,
                                                   origin.span->confidence)});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    if (a.span.span.size() != b.span.span.size()) return a.span.span.size() > b.span.span.size();
    if (a.span.span.start != b.span.span.start) return a.span.span.start < b.span.span.start;
    return a.span.label < b.span.label;
  });

  detail::IntervalSet taken;
  std::vector<EntitySpan> out = spans;
  for (const auto& s : spans) taken.insert(s.span);
  for (auto& c : candidates) {
    if (taken.overlaps(c.span.span)) continue;
    taken.insert(c.span.span);
    out.push_back(std::move(c.span));
  }
  sort_spans(out);
  return out;
}

}  // namespace anon
