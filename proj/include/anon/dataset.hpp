#pragma once

// Token-classification dataset preparation: IOB2-labelled sentence windows,
// negative-window subsampling, document-level train/validation/test split,
// and the per-language corpus measures.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>
#include <random>
#include <string>
#include <vector>

#include "anon/corpus.hpp"
#include "anon/error.hpp"
#include "anon/iob2.hpp"
#include "anon/tokenize.hpp"

namespace anon {

struct PrepConfig {
  std::size_t max_seq_len = 192;
  double truncation_stride_ratio = 0.5;
  double neg_to_pos_ratio = 1.5;
  std::array<double, 3> split_fractions{0.8, 0.1, 0.1};  // train, validation, test
  std::uint64_t rng_seed = 42;
  bool per_language_sampling = true;

  void validate() const {
    if (max_seq_len < 2) throw InvalidConfig("max_seq_len must be at least 2");
    if (!(truncation_stride_ratio > 0.0 && truncation_stride_ratio < 1.0))
      throw InvalidConfig("truncation_stride_ratio must lie in (0, 1)");
    if (!(neg_to_pos_ratio >= 0.0)) throw InvalidConfig("neg_to_pos_ratio must be >= 0");
    double sum = 0.0;
    for (double f : split_fractions) {
      if (!(f >= 0.0)) throw InvalidConfig("split fractions must be >= 0");
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidConfig("split fractions must sum to 1");
  }
};

/// Token-index window [begin, end) over a sentence's token list.
struct TokenWindow {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  auto operator<=>(const TokenWindow&) const = default;
};

struct TrainingExample {
  std::string doc_id;
  std::size_t sentence_index = 0;
  TokenWindow window;
  std::vector<std::string> tokens;  // UTF-8
  std::vector<std::string> labels;  // IOB2

  bool positive() const {
    return std::any_of(labels.begin(), labels.end(), [](const std::string& l) { return l != "O"; });
  }
  friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

/// Tokens shared by consecutive windows.
inline std::size_t overlap_len(const PrepConfig& cfg) {
  return static_cast<std::size_t>(
      std::lround(static_cast<double>(cfg.max_seq_len) * cfg.truncation_stride_ratio));
}

/// Windows of width max_seq_len stepping by (width - overlap); the last
/// window is right-aligned at n so there is no short tail.
inline std::vector<TokenWindow> chunk_windows(std::size_t n, const PrepConfig& cfg) {
  cfg.validate();
  const std::size_t width = cfg.max_seq_len;
  const std::size_t overlap = overlap_len(cfg);
  if (overlap >= width) throw InvalidConfig("window step is zero (overlap equals max_seq_len)");
  const std::size_t step = width - overlap;

  std::vector<TokenWindow> out;
  if (n == 0) return out;
  if (n <= width) {
    out.push_back({0, n});
    return out;
  }
  std::size_t begin = 0;
  for (; begin + width < n; begin += step) out.push_back({begin, begin + width});
  out.push_back({n - width, n});
  return out;
}

/// Picks, for every token, the label from the window whose centre is
/// nearest; ties go to the earlier window.
inline std::vector<std::string> reconstruct_labels(std::size_t n, const std::vector<TokenWindow>& windows,
                                                   const std::vector<std::vector<std::string>>& labels) {
  if (windows.size() != labels.size()) throw ValidationError("one label list per window required");
  std::vector<std::string> out(n, "O");
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto& win = windows[w];
    if (labels[w].size() != win.size()) throw ValidationError("window label count mismatch");
    const double centre = (static_cast<double>(win.begin) + static_cast<double>(win.end)) / 2.0;
    for (std::size_t t = win.begin; t < win.end && t < n; ++t) {
      const double dist = std::abs(static_cast<double>(t) + 0.5 - centre);
      if (dist < best[t]) {
        best[t] = dist;
        out[t] = labels[w][t - win.begin];
      }
    }
  }
  return out;
}

struct PrepStats {
  std::size_t cross_sentence_dropped = 0;
  std::size_t snapped = 0;
  std::size_t uncovered_dropped = 0;
  std::size_t positives = 0;
  std::size_t negatives_total = 0;
  std::size_t negatives_kept = 0;
};

/// One example per window of every sentence of `doc`.
inline std::vector<TrainingExample> build_examples(const Document& doc, const PrepConfig& cfg,
                                                   PrepStats* stats = nullptr) {
  std::vector<std::vector<EntitySpan>> per_sentence(doc.sentences.size());
  for (const auto& g : doc.gold) {
    const auto idx = sentence_of(doc, g.span);
    if (g.cross_sentence || idx == std::string::npos) {
      if (stats) ++stats->cross_sentence_dropped;
      continue;
    }
    per_sentence[idx].push_back(g);
  }

  std::vector<TrainingExample> out;
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const auto tokens = tokenize(doc.text, doc.sentences[s]);
    Iob2Stats iob;
    const auto tags = to_iob2(tokens, per_sentence[s], &iob);
    if (stats) {
      stats->snapped += iob.snapped;
      stats->uncovered_dropped += iob.dropped;
    }
    for (const auto& w : chunk_windows(tokens.size(), cfg)) {
      TrainingExample ex;
      ex.doc_id = doc.id;
      ex.sentence_index = s;
      ex.window = w;
      for (std::size_t t = w.begin; t < w.end; ++t) {
        ex.tokens.push_back(unicode::encode_utf8(tokens[t].text));
        ex.labels.push_back(tags[t]);
      }
      out.push_back(std::move(ex));
    }
  }
  return out;
}

/// Keeps every positive window and floor(ratio * #positives) negatives
/// chosen uniformly without replacement. Relative order is preserved.
inline std::vector<TrainingExample> sample_negatives(const std::vector<TrainingExample>& examples,
                                                     const PrepConfig& cfg,
                                                     PrepStats* stats = nullptr) {
  std::vector<std::size_t> negatives;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].positive())
      ++positives;
    else
      negatives.push_back(i);
  }
  const auto cap = static_cast<std::size_t>(
      std::floor(cfg.neg_to_pos_ratio * static_cast<double>(positives) + 1e-9));
  const std::size_t keep = std::min(negatives.size(), cap);

  std::mt19937_64 rng(cfg.rng_seed);
  std::shuffle(negatives.begin(), negatives.end(), rng);
  negatives.resize(keep);
  std::vector<bool> kept(examples.size(), false);
  for (auto i : negatives) kept[i] = true;

  std::vector<TrainingExample> out;
  out.reserve(positives + keep);
  for (std::size_t i = 0; i < examples.size(); ++i)
    if (kept[i] || examples[i].positive()) out.push_back(examples[i]);
  if (stats) {
    stats->positives += positives;
    stats->negatives_total += examples.size() - positives;
    stats->negatives_kept += keep;
  }
  return out;
}

template <typename T>
struct Split {
  std::vector<T> train;
  std::vector<T> validation;
  std::vector<T> test;
};

/// Split sizes for n items: validation and test get floor(f * n), raised to
/// at least one each; train takes the rest.
inline std::array<std::size_t, 3> split_sizes(std::size_t n, const PrepConfig& cfg) {
  if (n < 3) throw InsufficientCorpus("need at least 3 documents to split, got " + std::to_string(n));
  auto sized = [&](double f) {
    const auto k = static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9));
    return std::max<std::size_t>(k, 1);
  };
  const std::size_t val = std::min(sized(cfg.split_fractions[1]), n - 1);
  const std::size_t test = std::min(sized(cfg.split_fractions[2]), n - val);
  return {n - val - test, val, test};
}

/// Document-level split after a seeded shuffle. Each part keeps input order.
inline Split<Document> split_corpus(const std::vector<Document>& docs, const PrepConfig& cfg) {
  cfg.validate();
  const auto sizes = split_sizes(docs.size(), cfg);
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.rng_seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<int> part(docs.size(), 0);
  for (std::size_t k = 0; k < order.size(); ++k)
    part[order[k]] = k < sizes[0] ? 0 : (k < sizes[0] + sizes[1] ? 1 : 2);
  Split<Document> out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    auto& dst = part[i] == 0 ? out.train : (part[i] == 1 ? out.validation : out.test);
    dst.push_back(docs[i]);
  }
  return out;
}

struct PreparedDataset {
  Split<TrainingExample> examples;
  PrepStats stats;
};

/// split -> window -> subsample negatives (per split; per language unless
/// cfg.per_language_sampling is off). Output is ordered by (doc id,
/// sentence index, window) within each split.
inline PreparedDataset prepare_dataset(const std::vector<Document>& docs, const PrepConfig& cfg) {
  cfg.validate();
  PreparedDataset out;
  const auto split = split_corpus(docs, cfg);

  auto process = [&](const std::vector<Document>& part) {
    std::map<int, std::vector<TrainingExample>> groups;
    for (const auto& doc : part) {
      const int key = cfg.per_language_sampling ? static_cast<int>(doc.language) : 0;
      auto ex = build_examples(doc, cfg, &out.stats);
      auto& g = groups[key];
      g.insert(g.end(), std::make_move_iterator(ex.begin()), std::make_move_iterator(ex.end()));
    }
    std::vector<TrainingExample> result;
    for (auto& [key, group] : groups) {
      auto kept = sample_negatives(group, cfg, &out.stats);
      result.insert(result.end(), std::make_move_iterator(kept.begin()),
                    std::make_move_iterator(kept.end()));
    }
    std::stable_sort(result.begin(), result.end(), [](const TrainingExample& a, const TrainingExample& b) {
      return std::tie(a.doc_id, a.sentence_index, a.window) < std::tie(b.doc_id, b.sentence_index, b.window);
    });
    return result;
  };
  out.examples.train = process(split.train);
  out.examples.validation = process(split.validation);
  out.examples.test = process(split.test);
  return out;
}

// ---------------------------------------------------------------------------
// Corpus measures

struct Histogram {
  std::vector<double> bin_edges;
  std::vector<std::size_t> counts;
  std::size_t underflow = 0;
  std::size_t overflow = 0;

  /// Log10-spaced edges from 10^lo_exp to 10^hi_exp.
  static Histogram log10(int lo_exp, int hi_exp, int bins_per_decade) {
    Histogram h;
    const int bins = (hi_exp - lo_exp) * bins_per_decade;
    for (int k = 0; k <= bins; ++k)
      h.bin_edges.push_back(std::pow(10.0, lo_exp + static_cast<double>(k) / bins_per_decade));
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    return h;
  }

  void add(double v) {
    if (v < bin_edges.front()) {
      ++underflow;
      return;
    }
    if (v > bin_edges.back()) {
      ++overflow;
      return;
    }
    auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), v);
    auto bin = static_cast<std::size_t>(it - bin_edges.begin()) - 1;
    if (bin >= counts.size()) bin = counts.size() - 1;  // top edge is inclusive
    ++counts[bin];
  }

  std::size_t total() const {
    return underflow + overflow + std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  }
};

struct DocumentCounts {
  std::string doc_id;
  Language language = Language::de;
  std::size_t tokens = 0;
  std::size_t anonymized_tokens = 0;
  std::size_t entities = 0;
  std::size_t anonymized_entities = 0;
};

struct LanguageStats {
  std::size_t documents = 0;
  std::size_t tokens = 0;
  std::size_t anonymized_tokens = 0;
  std::size_t entities = 0;
  std::size_t anonymized_entities = 0;
  Histogram tokens_hist;
  Histogram anonymized_tokens_hist;
  Histogram entities_hist;
  Histogram anonymized_entities_hist;
};

struct StatsConfig {
  int bins_per_decade = 5;
  /// Labels that are annotated but left in clear text.
  std::vector<std::string> non_anonymized_labels;
};

struct CorpusStats {
  std::vector<DocumentCounts> documents;
  std::map<Language, LanguageStats> languages;
};

inline DocumentCounts count_document(const Document& doc, const StatsConfig& cfg = {}) {
  DocumentCounts c;
  c.doc_id = doc.id;
  c.language = doc.language;
  const auto tokens = tokenize(doc.text);
  c.tokens = tokens.size();
  std::vector<bool> anonymized(tokens.size(), false);
  for (const auto& g : doc.gold) {
    ++c.entities;
    if (std::find(cfg.non_anonymized_labels.begin(), cfg.non_anonymized_labels.end(), g.label) !=
        cfg.non_anonymized_labels.end())
      continue;
    ++c.anonymized_entities;
    for (std::size_t t = 0; t < tokens.size(); ++t)
      if (tokens[t].span.overlaps(g.span)) anonymized[t] = true;
  }
  c.anonymized_tokens = static_cast<std::size_t>(std::count(anonymized.begin(), anonymized.end(), true));
  return c;
}

/// Exact per-document counts and per-language histograms: tokens and
/// entities on [10, 1e5], anonymized counts on [1, 1e4].
inline CorpusStats corpus_stats(const std::vector<Document>& docs, const StatsConfig& cfg = {}) {
  CorpusStats out;
  for (const auto& doc : docs) out.documents.push_back(count_document(doc, cfg));
  for (auto lang : kLanguages) {
    LanguageStats ls;
    ls.tokens_hist = Histogram::log10(1, 5, cfg.bins_per_decade);
    ls.entities_hist = Histogram::log10(1, 5, cfg.bins_per_decade);
    ls.anonymized_tokens_hist = Histogram::log10(0, 4, cfg.bins_per_decade);
    ls.anonymized_entities_hist = Histogram::log10(0, 4, cfg.bins_per_decade);
    out.languages.emplace(lang, std::move(ls));
  }
  for (const auto& c : out.documents) {
    auto& ls = out.languages.at(c.language);
    ++ls.documents;
    ls.tokens += c.tokens;
    ls.anonymized_tokens += c.anonymized_tokens;
    ls.entities += c.entities;
    ls.anonymized_entities += c.anonymized_entities;
    ls.tokens_hist.add(static_cast<double>(c.tokens));
    ls.anonymized_tokens_hist.add(static_cast<double>(c.anonymized_tokens));
    ls.entities_hist.add(static_cast<double>(c.entities));
    ls.anonymized_entities_hist.add(static_cast<double>(c.anonymized_entities));
  }
  return out;
}

}  // namespace anon
