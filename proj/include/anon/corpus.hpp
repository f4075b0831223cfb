#pragma once

// Canonical document model: text, language, sentence segmentation and gold
// annotations. Offsets everywhere are Unicode scalar values.

#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "anon/error.hpp"
#include "anon/hash.hpp"
#include "anon/types.hpp"
#include "anon/unicode.hpp"

namespace anon {

struct Document {
  std::string id;
  Language language = Language::de;
  std::u32string text;
  std::vector<CharSpan> sentences;
  std::vector<EntitySpan> gold;

  std::size_t size() const noexcept { return text.size(); }
};

/// Per-language abbreviations after which a period does not end a sentence.
/// Entries include the trailing period ("Art.").
class AbbreviationTable {
public:
  AbbreviationTable() = default;
  explicit AbbreviationTable(const std::vector<std::string>& entries) {
    for (const auto& e : entries) add(e);
  }

  void add(std::string_view entry) {
    if (!entry.empty()) entries_.insert(unicode::decode_utf8(entry));
  }
  bool contains(std::u32string_view token) const {
    return entries_.find(std::u32string(token)) != entries_.end();
  }
  std::size_t size() const noexcept { return entries_.size(); }
  std::vector<std::string> entries() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) out.push_back(unicode::encode_utf8(e));
    return out;
  }

  /// One entry per line; blank lines and lines starting with '#' are skipped.
  static AbbreviationTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open abbreviation table " + path);
    AbbreviationTable table;
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      table.add(line);
    }
    return table;
  }

  static const AbbreviationTable& defaults(Language lang);

private:
  std::set<std::u32string> entries_;
};

namespace detail {

inline const std::vector<std::string>& seed_abbreviations(Language lang) {
  static const std::vector<std::string> de{
      "Abs.", "Art.", "Aufl.", "Bd.", "Bst.", "bzw.", "ca.", "Dr.", "d.h.", "f.", "ff.",
      "Fr.", "gem.", "Hr.", "i.V.m.", "lit.", "Nr.", "pag.", "Prof.", "Rz.", "u.a.",
      "usw.", "vgl.", "z.B.", "Ziff.", "Jan.", "Feb.", "Febr.", "Mär.", "Apr.", "Jun.",
      "Jul.", "Aug.", "Sep.", "Sept.", "Okt.", "Nov.", "Dez."};
  static const std::vector<std::string> fr{
      "al.", "art.", "c.-à-d.", "cf.", "ch.", "consid.", "Dr.", "év.", "évent.", "fr.",
      "let.", "Mme.", "n.", "no.", "p.", "pag.", "pp.", "Prof.", "réf.", "resp.", "ss.",
      "vol.", "janv.", "févr.", "avr.", "juil.", "sept.", "oct.", "nov.", "déc."};
  static const std::vector<std::string> it{
      "art.", "avv.", "cfr.", "cons.", "consid.", "cpv.", "dott.", "ecc.", "fr.", "let.",
      "lett.", "n.", "p.", "pag.", "pp.", "prof.", "Prof.", "sig.", "vol.", "gen.", "feb.",
      "mar.", "apr.", "giu.", "lug.", "ago.", "set.", "ott.", "nov.", "dic."};
  switch (lang) {
    case Language::de: return de;
    case Language::fr: return fr;
    case Language::it: return it;
  }
  return de;
}

constexpr bool is_terminal(char32_t c) noexcept {
  return c == U'.' || c == U'!' || c == U'?' || c == U':';
}
constexpr bool is_closer(char32_t c) noexcept {
  return c == U')' || c == U']' || c == U'"' || c == U'\'' || c == 0xBB || c == 0x201C ||
         c == 0x201D || c == 0x2019;
}
constexpr bool is_opener(char32_t c) noexcept {
  return c == U'(' || c == U'[' || c == U'"' || c == U'\'' || c == 0xAB || c == 0x201E ||
         c == 0x201C || c == 0x2018;
}

/// Anonymized-party shape `[A-Z]\.(_{2,})?` over a whole token.
inline bool is_party_token(std::u32string_view tok) {
  if (tok.size() < 2 || tok[0] < U'A' || tok[0] > U'Z' || tok[1] != U'.') return false;
  if (tok.size() == 2) return true;
  if (tok.size() < 4) return false;
  return std::all_of(tok.begin() + 2, tok.end(), [](char32_t c) { return c == U'_'; });
}

}  // namespace detail

inline const AbbreviationTable& AbbreviationTable::defaults(Language lang) {
  static const AbbreviationTable de(detail::seed_abbreviations(Language::de));
  static const AbbreviationTable fr(detail::seed_abbreviations(Language::fr));
  static const AbbreviationTable it(detail::seed_abbreviations(Language::it));
  switch (lang) {
    case Language::de: return de;
    case Language::fr: return fr;
    case Language::it: return it;
  }
  return de;
}

/// Rule-based sentence splitter. A boundary follows one of `. ! ? :` (plus
/// any closing quotes/brackets) when whitespace and then an uppercase letter
/// or digit come next. A period is not a boundary after an abbreviation, a
/// one- or two-digit ordinal, or a party initial such as "A." (the latter
/// only when the gap stays on the same line).
inline std::vector<CharSpan> segment_sentences(std::u32string_view text,
                                               const AbbreviationTable& abbreviations) {
  using unicode::is_space;
  std::vector<CharSpan> spans;
  const std::size_t n = text.size();
  std::size_t start = 0;
  while (start < n && is_space(text[start])) ++start;
  if (start == n) return spans;

  auto suppressed = [&](std::size_t dot, bool newline_gap) {
    std::size_t ts = dot;
    while (ts > 0 && !is_space(text[ts - 1])) --ts;
    while (ts < dot && detail::is_opener(text[ts])) ++ts;
    const auto token = text.substr(ts, dot + 1 - ts);
    if (abbreviations.contains(token)) return true;
    if (const auto apos = token.find_last_of(U"'\u2019"); apos != std::u32string_view::npos &&
        abbreviations.contains(token.substr(apos + 1)))
      return true;
    const auto stem = token.substr(0, token.size() - 1);
    if (!stem.empty() && stem.size() <= 2 &&
        std::all_of(stem.begin(), stem.end(), unicode::is_digit))
      return true;
    return !newline_gap && detail::is_party_token(token);
  };

  for (std::size_t pos = start; pos < n; ++pos) {
    if (!detail::is_terminal(text[pos])) continue;
    std::size_t j = pos + 1;
    while (j < n && detail::is_closer(text[j])) ++j;
    if (j >= n || !is_space(text[j])) continue;
    std::size_t k = j;
    bool newline = false;
    while (k < n && is_space(text[k])) {
      newline = newline || text[k] == U'\n';
      ++k;
    }
    if (k >= n) break;
    std::size_t m = k;
    while (m < n && detail::is_opener(text[m])) ++m;
    if (m >= n || !(unicode::is_upper(text[m]) || unicode::is_digit(text[m]))) continue;
    if (text[pos] == U'.' && suppressed(pos, newline)) continue;
    spans.push_back({start, j});
    start = k;
    pos = k - 1;
  }
  std::size_t end = n;
  while (end > start && is_space(text[end - 1])) --end;
  if (end > start) spans.push_back({start, end});
  return spans;
}

inline std::vector<CharSpan> segment_sentences(std::u32string_view text, Language language) {
  return segment_sentences(text, AbbreviationTable::defaults(language));
}

inline std::u32string span_text(std::u32string_view text, CharSpan span) {
  if (span.start > span.end || span.end > text.size())
    throw SpanOutOfBounds("span [" + std::to_string(span.start) + "," + std::to_string(span.end) +
                          ") outside text of length " + std::to_string(text.size()));
  return std::u32string(text.substr(span.start, span.size()));
}

inline std::u32string span_text(const Document& doc, CharSpan span) {
  return span_text(doc.text, span);
}

/// CRLF and lone CR become LF.
inline std::string normalize_line_endings(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '\r') {
      out.push_back('\n');
      if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
    } else {
      out.push_back(raw[i]);
    }
  }
  return out;
}

inline std::string document_id(Language language, std::string_view utf8_text) {
  std::string payload(to_string(language));
  payload.push_back('\0');
  payload.append(utf8_text);
  return sha256_hex(payload).substr(0, 16);
}

inline Document ingest_text(std::string_view raw, Language language,
                            const AbbreviationTable& abbreviations) {
  const std::string normalized = normalize_line_endings(raw);
  Document doc;
  doc.language = language;
  doc.text = unicode::decode_utf8(normalized);
  if (std::all_of(doc.text.begin(), doc.text.end(), unicode::is_space)) throw EmptyDocument();
  doc.id = document_id(language, normalized);
  doc.sentences = segment_sentences(doc.text, abbreviations);
  return doc;
}

inline Document ingest_text(std::string_view raw, Language language) {
  return ingest_text(raw, language, AbbreviationTable::defaults(language));
}

/// Builds an EntitySpan over doc.text with its surface filled in.
inline EntitySpan make_span(const Document& doc, CharSpan span, std::string label,
                            Source source = Source::gold, double confidence = 1.0) {
  if (span.start >= span.end) throw SpanOutOfBounds("entity span must be non-empty");
  return EntitySpan{span, std::move(label), span_text(doc, span), source, confidence, false};
}

/// Index of the sentence containing `span` entirely, or npos.
inline std::size_t sentence_of(const Document& doc, CharSpan span) {
  auto it = std::upper_bound(doc.sentences.begin(), doc.sentences.end(), span.start,
                             [](std::size_t v, const CharSpan& s) { return v < s.start; });
  if (it == doc.sentences.begin()) return std::string::npos;
  --it;
  if (it->contains(span)) return static_cast<std::size_t>(it - doc.sentences.begin());
  return std::string::npos;
}

/// Validates gold spans against the document and flags sentence-crossing ones.
inline void attach_gold(Document& doc, std::vector<EntitySpan> gold, const LabelSet* labels = nullptr) {
  for (auto& g : gold) {
    if (labels) labels->require(g.label);
    const auto actual = span_text(doc, g.span);
    if (g.surface.empty()) g.surface = actual;
    if (g.surface != actual)
      throw ValidationError("gold surface does not match text at [" + std::to_string(g.span.start) +
                            "," + std::to_string(g.span.end) + ")");
    g.cross_sentence = sentence_of(doc, g.span) == std::string::npos;
  }
  sort_spans(gold);
  doc.gold = std::move(gold);
}

}  // namespace anon
