#pragma once

// Candidate entity detectors (regular expressions, gazetteer, rubrum-based
// conventional heuristic, model-backed) and the priority merge that turns
// their outputs into one non-overlapping suggestion list.

#include <boost/regex.hpp>

#include <chrono>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "anon/corpus.hpp"
#include "anon/dataset.hpp"
#include "anon/error.hpp"
#include "anon/iob2.hpp"
#include "anon/protocol.hpp"
#include "anon/tokenize.hpp"
#include "anon/types.hpp"

namespace anon {

struct RegexRule {
  std::string pattern;  // Perl syntax, matched leftmost-longest
  std::string label;
  bool case_insensitive = false;
};

struct DetectorConfig {
  std::vector<RegexRule> regex_rules;
  std::map<std::string, std::vector<std::string>> gazetteer;  // label -> surfaces
  std::map<Language, std::vector<std::string>> rubrum_markers;
  std::map<Language, std::vector<std::string>> party_cues;
  std::vector<std::string> org_suffixes;
  std::map<Language, std::vector<std::string>> edge_stopwords;
  std::optional<std::string> model_endpoint;
  long timeout_ms = 5000;
  double min_confidence = 0.0;
  double regex_confidence = 1.0;
  double gazetteer_confidence = 1.0;
  double conventional_confidence = 0.8;
  double rubrum_fallback_fraction = 0.25;
  std::size_t model_batch_size = 32;
  PrepConfig windowing;  // max_seq_len / stride for model requests

  static DetectorConfig defaults() {
    DetectorConfig c;
    c.regex_rules = {
        {R"(\b[A-Z]\._{2,})", "PER", false},
        {R"(\bCH\d{2}(\s?[0-9A-Z]{4}){4}(\s?[0-9A-Z]{1,2})?)", "MISC", false},
        {R"(\b756\.\d{4}\.\d{4}\.\d{2}\b)", "MISC", false},
        {R"(\b[\w.+-]+@[\w-]+(\.[\w-]+)+)", "MISC", false},
        {R"((\+41|\b0)\s?\d{2}\s?\d{3}\s?\d{2}\s?\d{2}\b)", "MISC", false},
    };
    c.rubrum_markers = {{Language::de, {"Sachverhalt", "Erwägungen"}},
                        {Language::fr, {"Faits", "considérant"}},
                        {Language::it, {"Fatti", "Diritto"}}};
    c.party_cues = {{Language::de, {"Beschwerdeführer", "Beschwerdegegner"}},
                    {Language::fr, {"recourant", "intimé"}},
                    {Language::it, {"ricorrente", "opponente"}}};
    c.org_suffixes = {"AG",     "GmbH",   "SA",       "Sàrl",      "SARL",  "Sagl",     "SpA",
                      "Srl",    "Ltd",    "Inc",      "Group",     "KG",    "Stiftung", "Verein",
                      "Bank",   "Banque", "Banca",    "Fondation", "Genossenschaft",
                      "Versicherung", "Versicherungen", "Assurance", "Assurances", "Association"};
    c.edge_stopwords = {
        {Language::de, {"Der", "Die", "Das", "Dem", "Den", "Des", "Ein", "Eine", "Herr", "Frau", "Dr",
                        "Rechtsanwalt", "Rechtsanwältin", "Fürsprecher", "Gegen", "Und", "Vertreten"}},
        {Language::fr, {"Le", "La", "Les", "Un", "Une", "Monsieur", "Madame", "Me", "Maître", "Contre", "Et"}},
        {Language::it, {"Il", "Lo", "La", "Le", "Gli", "Un", "Una", "Signor", "Signora", "Avv", "Contro", "E"}}};
    return c;
  }

  void validate() const {
    if (min_confidence < 0.0 || min_confidence > 1.0) throw InvalidConfig("min_confidence must lie in [0, 1]");
    for (const auto& r : regex_rules) {
      if (r.label.empty()) throw InvalidConfig("regex rule '" + r.pattern + "' has no label");
      try {
        boost::regex re(r.pattern, boost::regex::perl);
      } catch (const boost::regex_error& e) {
        throw InvalidConfig("regex '" + r.pattern + "' does not compile: " + e.what());
      }
    }
    for (const auto& [lang, markers] : rubrum_markers)
      if (markers.empty()) throw InvalidConfig("empty rubrum marker list for " + std::string(to_string(lang)));
    if (timeout_ms <= 0) throw InvalidConfig("timeout must be positive");
  }
};

// ---------------------------------------------------------------------------
// Overlap resolution helpers

namespace detail {

/// Disjoint interval set with O(log n) overlap queries.
class IntervalSet {
public:
  bool overlaps(CharSpan s) const {
    auto it = by_start_.lower_bound(s.end);
    if (it == by_start_.begin()) return false;
    --it;
    return it->second > s.start;
  }
  void insert(CharSpan s) { by_start_.emplace(s.start, s.end); }

private:
  std::map<std::size_t, std::size_t> by_start_;
};

/// Longest candidate wins, then earliest start, then label.
inline std::vector<EntitySpan> keep_longest(std::vector<EntitySpan> candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const EntitySpan& a, const EntitySpan& b) {
    if (a.span.size() != b.span.size()) return a.span.size() > b.span.size();
    if (a.span.start != b.span.start) return a.span.start < b.span.start;
    return a.label < b.label;
  });
  IntervalSet taken;
  std::vector<EntitySpan> out;
  for (auto& c : candidates) {
    if (taken.overlaps(c.span)) continue;
    taken.insert(c.span);
    out.push_back(std::move(c));
  }
  sort_spans(out);
  return out;
}

inline bool starts_with_folded(std::u32string_view token, std::u32string_view prefix) {
  if (token.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (unicode::to_lower(token[i]) != unicode::to_lower(prefix[i])) return false;
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Regular expressions

/// Non-overlapping leftmost-longest matches of each rule. Matches of
/// different rules may overlap; merge() resolves that.
inline std::vector<EntitySpan> detect_regex(const Document& doc, const std::vector<RegexRule>& rules,
                                            double confidence = 1.0) {
  std::vector<EntitySpan> out;
  if (rules.empty()) return out;
  const auto idx = unicode::encode_indexed(doc.text);
  const auto flags = boost::match_posix | boost::match_not_null;
  for (const auto& rule : rules) {
    boost::regex::flag_type syntax = boost::regex::perl;
    if (rule.case_insensitive) syntax |= boost::regex::icase;
    boost::regex re;
    try {
      re.assign(rule.pattern, syntax);
    } catch (const boost::regex_error& e) {
      throw InvalidConfig("regex '" + rule.pattern + "' does not compile: " + e.what());
    }
    for (boost::sregex_iterator it(idx.bytes.begin(), idx.bytes.end(), re, flags), end; it != end; ++it) {
      const auto b = static_cast<std::size_t>(it->position());
      const auto e = b + static_cast<std::size_t>(it->length());
      CharSpan span{idx.scalar_of_byte(b), idx.scalar_of_byte(e)};
      if (span.empty()) continue;
      out.push_back(make_span(doc, span, rule.label, Source::regex, confidence));
    }
  }
  sort_spans(out);
  return out;
}

// ---------------------------------------------------------------------------
// Gazetteer

/// Whole-token, case-sensitive occurrences of every gazetteer surface;
/// overlapping matches keep the longest surface.
inline std::vector<EntitySpan> detect_gazetteer(const Document& doc,
                                                const std::map<std::string, std::vector<std::string>>& gazetteer,
                                                double confidence = 1.0) {
  std::vector<EntitySpan> candidates;
  if (gazetteer.empty()) return candidates;
  const TokenBoundaries bounds(tokenize(doc.text), doc.text.size());
  for (const auto& [label, surfaces] : gazetteer) {
    for (const auto& surface : surfaces) {
      for (const auto& span : find_whole_token(doc.text, bounds, unicode::decode_utf8(surface)))
        candidates.push_back(make_span(doc, span, label, Source::gazetteer, confidence));
    }
  }
  return detail::keep_longest(std::move(candidates));
}

// ---------------------------------------------------------------------------
// Conventional (rubrum heuristic)

/// End offset of the rubrum: the earliest whole-token section marker, or
/// the fallback fraction of the text when no marker occurs.
inline std::size_t rubrum_end(const Document& doc, const DetectorConfig& cfg, const TokenBoundaries& bounds,
                              std::vector<std::string>* warnings = nullptr) {
  std::size_t best = std::string::npos;
  if (auto it = cfg.rubrum_markers.find(doc.language); it != cfg.rubrum_markers.end()) {
    for (const auto& marker : it->second) {
      const auto hits = find_whole_token(doc.text, bounds, unicode::decode_utf8(marker));
      if (!hits.empty()) best = std::min(best, hits.front().start);
    }
  }
  if (best != std::string::npos) return best;
  if (warnings)
    warnings->push_back("conventional: no rubrum marker found; using the first " +
                        std::to_string(static_cast<int>(cfg.rubrum_fallback_fraction * 100)) + "% of the text");
  return static_cast<std::size_t>(
      std::ceil(static_cast<double>(doc.text.size()) * cfg.rubrum_fallback_fraction));
}

/// Two stages: capitalized token runs next to a party-role cue inside the
/// rubrum become PER/ORG surfaces, then every whole-token occurrence of
/// those surfaces in the document is spanned.
inline std::vector<EntitySpan> detect_conventional(const Document& doc, const DetectorConfig& cfg,
                                                   std::vector<std::string>* warnings = nullptr) {
  const auto tokens = tokenize(doc.text);
  const TokenBoundaries bounds(tokens, doc.text.size());
  const std::size_t rubrum = rubrum_end(doc, cfg, bounds, warnings);

  std::vector<std::u32string> cues, stopwords;
  if (auto it = cfg.party_cues.find(doc.language); it != cfg.party_cues.end())
    for (const auto& c : it->second) cues.push_back(unicode::decode_utf8(c));
  if (auto it = cfg.edge_stopwords.find(doc.language); it != cfg.edge_stopwords.end())
    for (const auto& s : it->second) stopwords.push_back(unicode::decode_utf8(s));
  std::set<std::u32string> org_suffixes;
  for (const auto& s : cfg.org_suffixes) org_suffixes.insert(unicode::decode_utf8(s));

  auto is_cue = [&](const Token& t) {
    return std::any_of(cues.begin(), cues.end(),
                       [&](const std::u32string& c) { return detail::starts_with_folded(t.text, c); });
  };
  auto is_stop = [&](const Token& t) {
    return std::find(stopwords.begin(), stopwords.end(), t.text) != stopwords.end();
  };
  auto capitalized = [&](const Token& t) {
    return !t.text.empty() && unicode::is_upper(t.text.front()) && !is_cue(t);
  };
  auto same_line_gap = [&](std::size_t a, std::size_t b) {  // between tokens a < b
    for (std::size_t p = tokens[a].span.end; p < tokens[b].span.start; ++p)
      if (doc.text[p] == U'\n') return false;
    return true;
  };
  auto hyphen_join = [&](std::size_t h) {
    return tokens[h].text == U"-" && h > 0 && h + 1 < tokens.size() &&
           tokens[h - 1].span.end == tokens[h].span.start && tokens[h].span.end == tokens[h + 1].span.start;
  };

  constexpr std::size_t kMaxRun = 6;
  std::vector<std::pair<std::u32string, std::string>> found;  // surface, label
  auto take_run = [&](std::size_t first, std::size_t last) {  // inclusive token range
    while (first <= last && is_stop(tokens[first])) ++first;
    if (first > last) return;
    while (last > first && is_stop(tokens[last])) --last;
    const CharSpan span{tokens[first].span.start, tokens[last].span.end};
    if (span.size() < 2) return;
    bool org = false;
    for (std::size_t k = first; k <= last; ++k) org = org || org_suffixes.count(tokens[k].text) > 0;
    auto surface = span_text(doc, span);
    if (std::none_of(found.begin(), found.end(), [&](const auto& f) { return f.first == surface; }))
      found.emplace_back(std::move(surface), org ? "ORG" : "PER");
  };

  for (std::size_t c = 0; c < tokens.size() && tokens[c].span.end <= rubrum; ++c) {
    if (!is_cue(tokens[c])) continue;
    // SEQ , CUE
    if (c >= 2 && tokens[c - 1].text == U"," && capitalized(tokens[c - 2])) {
      std::size_t first = c - 2;
      std::size_t count = 1;
      while (first > 0 && count < kMaxRun) {
        if (capitalized(tokens[first - 1]) && same_line_gap(first - 1, first)) {
          --first;
          ++count;
        } else if (first >= 2 && hyphen_join(first - 1) && capitalized(tokens[first - 2])) {
          first -= 2;
          ++count;
        } else {
          break;
        }
      }
      take_run(first, c - 2);
    }
    // CUE [:|,] SEQ
    std::size_t j = c + 1;
    if (j < tokens.size() && (tokens[j].text == U":" || tokens[j].text == U",")) ++j;
    if (j < tokens.size() && tokens[j].span.end <= rubrum && capitalized(tokens[j])) {
      std::size_t last = j;
      std::size_t count = 1;
      while (last + 1 < tokens.size() && count < kMaxRun && tokens[last + 1].span.end <= rubrum) {
        if (capitalized(tokens[last + 1]) && same_line_gap(last, last + 1)) {
          ++last;
          ++count;
        } else if (last + 2 < tokens.size() && hyphen_join(last + 1) && capitalized(tokens[last + 2])) {
          last += 2;
          ++count;
        } else {
          break;
        }
      }
      take_run(j, last);
    }
  }

  std::vector<EntitySpan> candidates;
  for (const auto& [surface, label] : found)
    for (const auto& span : find_whole_token(doc.text, bounds, surface))
      candidates.push_back(make_span(doc, span, label, Source::conventional, cfg.conventional_confidence));
  return detail::keep_longest(std::move(candidates));
}

// ---------------------------------------------------------------------------
// Model-backed

struct ModelStats {
  std::size_t requests = 0;
  std::size_t windows = 0;
  std::size_t repairs = 0;
};

/// Labels every sentence through `client`. Sentences longer than
/// cfg.windowing.max_seq_len are split into overlapping windows and stitched
/// back with the centre-wins rule. Throws DetectorUnavailable when the
/// client cannot be reached and ProtocolViolation on malformed answers.
inline std::vector<EntitySpan> detect_model(const Document& doc, LabelingClient& client, const DetectorConfig& cfg,
                                            ModelStats* stats = nullptr) {
  struct Pending {
    std::size_t sentence;
    TokenWindow window;
  };
  std::vector<std::vector<Token>> sentence_tokens;
  std::vector<std::vector<TokenWindow>> sentence_windows;
  std::vector<Pending> pending;
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    sentence_tokens.push_back(tokenize(doc.text, doc.sentences[s]));
    sentence_windows.push_back(chunk_windows(sentence_tokens.back().size(), cfg.windowing));
    for (const auto& w : sentence_windows.back()) pending.push_back({s, w});
  }

  // labels/confidences per sentence per window, filled batch by batch
  std::vector<std::vector<std::vector<std::string>>> labels(doc.sentences.size());
  std::vector<std::vector<std::vector<double>>> confs(doc.sentences.size());
  const std::size_t batch = std::max<std::size_t>(cfg.model_batch_size, 1);
  for (std::size_t b = 0; b < pending.size(); b += batch) {
    LabelRequest req;
    req.language = doc.language;
    const std::size_t e = std::min(pending.size(), b + batch);
    for (std::size_t k = b; k < e; ++k) {
      std::vector<std::string> toks;
      const auto& p = pending[k];
      for (std::size_t t = p.window.begin; t < p.window.end; ++t)
        toks.push_back(unicode::encode_utf8(sentence_tokens[p.sentence][t].text));
      req.sentences.push_back(std::move(toks));
    }
    auto resp = client.label(req);
    if (resp.sentences.size() != req.sentences.size())
      throw ProtocolViolation("response sentence count does not match request");
    for (std::size_t k = b; k < e; ++k) {
      auto& sl = resp.sentences[k - b];
      if (sl.labels.size() != req.sentences[k - b].size())
        throw ProtocolViolation("label count does not match token count");
      if (sl.confidences.empty()) sl.confidences.assign(sl.labels.size(), 1.0);
      if (sl.confidences.size() != sl.labels.size())
        throw ProtocolViolation("confidences not parallel to labels");
      labels[pending[k].sentence].push_back(std::move(sl.labels));
      confs[pending[k].sentence].push_back(std::move(sl.confidences));
    }
    if (stats) ++stats->requests;
  }
  if (stats) stats->windows += pending.size();

  std::vector<EntitySpan> out;
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const auto& toks = sentence_tokens[s];
    const auto& wins = sentence_windows[s];
    const auto tags = reconstruct_labels(toks.size(), wins, labels[s]);
    // confidences follow the same centre-wins choice as the labels
    std::vector<double> tok_conf(toks.size(), 1.0);
    std::vector<double> best(toks.size(), std::numeric_limits<double>::infinity());
    for (std::size_t w = 0; w < wins.size(); ++w) {
      const double centre = (static_cast<double>(wins[w].begin) + static_cast<double>(wins[w].end)) / 2.0;
      for (std::size_t t = wins[w].begin; t < wins[w].end; ++t) {
        const double d = std::abs(static_cast<double>(t) + 0.5 - centre);
        if (d < best[t]) {
          best[t] = d;
          tok_conf[t] = confs[s][w][t - wins[w].begin];
        }
      }
    }
    DecodeStats ds;
    std::vector<TokenSpan> spans;
    try {
      spans = extract_spans(tags, &ds);
    } catch (const UnknownLabel& e) {
      throw ProtocolViolation(e.what());
    }
    if (stats) stats->repairs += ds.repairs;
    for (const auto& ts : spans) {
      double conf = 0.0;
      for (std::size_t t = ts.start; t < ts.end; ++t) conf += tok_conf[t];
      conf /= static_cast<double>(ts.end - ts.start);
      if (conf < cfg.min_confidence) continue;
      const CharSpan span{toks[ts.start].span.start, toks[ts.end - 1].span.end};
      out.push_back(make_span(doc, span, ts.label, Source::model, conf));
    }
  }
  sort_spans(out);
  return out;
}

// ---------------------------------------------------------------------------
// Merge

/// Rank per source; lower wins.
struct MergePolicy {
  std::map<Source, int> rank{{Source::manual, 0},       {Source::gold, 1},      {Source::regex, 2},
                             {Source::model, 3},        {Source::conventional, 4}, {Source::gazetteer, 5},
                             {Source::uniformized, 6}};

  int rank_of(Source s) const {
    auto it = rank.find(s);
    return it == rank.end() ? 100 : it->second;
  }
};

/// Resolves overlaps by source priority, then longer span, then earlier
/// start. The result is sorted, non-overlapping and independent of the
/// order of `results`.
inline std::vector<EntitySpan> merge(const std::vector<std::vector<EntitySpan>>& results,
                                     const MergePolicy& policy = {}) {
  std::vector<EntitySpan> all;
  for (const auto& r : results) all.insert(all.end(), r.begin(), r.end());
  std::sort(all.begin(), all.end(), [&](const EntitySpan& a, const EntitySpan& b) {
    const int ra = policy.rank_of(a.source), rb = policy.rank_of(b.source);
    if (ra != rb) return ra < rb;
    if (a.span.size() != b.span.size()) return a.span.size() > b.span.size();
    if (a.span.start != b.span.start) return a.span.start < b.span.start;
    if (a.label != b.label) return a.label < b.label;
    return a.confidence > b.confidence;
  });
  detail::IntervalSet taken;
  std::vector<EntitySpan> out;
  for (auto& s : all) {
    if (taken.overlaps(s.span)) continue;
    taken.insert(s.span);
    out.push_back(std::move(s));
  }
  sort_spans(out);
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline

enum class DetectorKind { regex, gazetteer, conventional, model };

constexpr std::string_view to_string(DetectorKind k) noexcept {
  switch (k) {
    case DetectorKind::regex: return "regex";
    case DetectorKind::gazetteer: return "gazetteer";
    case DetectorKind::conventional: return "conventional";
    case DetectorKind::model: return "model";
  }
  return "regex";
}

/// Parses a comma-separated detector list such as "regex,conventional".
inline std::vector<DetectorKind> parse_detectors(std::string_view list) {
  std::vector<DetectorKind> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    auto comma = list.find(',', pos);
    if (comma == std::string_view::npos) comma = list.size();
    const auto name = list.substr(pos, comma - pos);
    pos = comma + 1;
    if (name.empty()) continue;
    bool ok = false;
    for (auto k : {DetectorKind::regex, DetectorKind::gazetteer, DetectorKind::conventional, DetectorKind::model}) {
      if (to_string(k) == name) {
        if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
        ok = true;
      }
    }
    if (!ok) throw ValidationError("unknown detector '" + std::string(name) + "'");
  }
  if (out.empty()) throw ValidationError("no detectors selected");
  return out;
}

struct DetectorReport {
  std::string name;
  std::size_t count = 0;
  double millis = 0.0;
  bool ok = true;
  std::string error;
};

struct DetectionResult {
  std::vector<EntitySpan> spans;  // merged
  std::vector<DetectorReport> detectors;
  std::vector<std::string> warnings;
  bool partial = false;  // a detector was unavailable
};

/// Runs the selected detectors concurrently over one document and merges
/// their output. An unreachable model endpoint marks the result partial;
/// protocol violations and config errors propagate.
inline DetectionResult run_detectors(const Document& doc, const DetectorConfig& cfg,
                                     const std::vector<DetectorKind>& kinds, LabelingClient* client = nullptr,
                                     const MergePolicy& policy = {}) {
  struct Outcome {
    std::vector<EntitySpan> spans;
    std::vector<std::string> warnings;
    double millis = 0.0;
  };
  auto run_one = [&doc, &cfg, client](DetectorKind kind) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    switch (kind) {
      case DetectorKind::regex: o.spans = detect_regex(doc, cfg.regex_rules, cfg.regex_confidence); break;
      case DetectorKind::gazetteer: o.spans = detect_gazetteer(doc, cfg.gazetteer, cfg.gazetteer_confidence); break;
      case DetectorKind::conventional: o.spans = detect_conventional(doc, cfg, &o.warnings); break;
      case DetectorKind::model:
        if (!client) throw DetectorUnavailable("model detector selected but no endpoint configured");
        o.spans = detect_model(doc, *client, cfg);
        break;
    }
    o.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return o;
  };

  std::vector<std::future<Outcome>> futures;
  for (auto k : kinds) futures.push_back(std::async(std::launch::async, run_one, k));

  DetectionResult result;
  std::vector<std::vector<EntitySpan>> lists;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    DetectorReport rep;
    rep.name = std::string(to_string(kinds[i]));
    try {
      auto o = futures[i].get();
      rep.count = o.spans.size();
      rep.millis = o.millis;
      for (auto& w : o.warnings) result.warnings.push_back(std::move(w));
      lists.push_back(std::move(o.spans));
    } catch (const DetectorUnavailable& e) {
      rep.ok = false;
      rep.error = e.what();
      result.partial = true;
      result.warnings.push_back(rep.name + ": " + e.what());
    }
    result.detectors.push_back(std::move(rep));
  }
  result.spans = merge(lists, policy);
  return result;
}

}  // namespace anon
