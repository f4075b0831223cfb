#pragma once

// Entity-level precision/recall/F1 with exact-match semantics (a prediction
// counts only when start, end and label all agree), aggregated micro over
// labels, optionally macro.

#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "anon/corpus.hpp"
#include "anon/detectors.hpp"
#include "anon/iob2.hpp"
#include "anon/uniformizer.hpp"

namespace anon {

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const Counts&, const Counts&) = default;
};

/// Percentages rounded to two decimals, half away from zero.
struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

namespace detail {

/// round(100 * num / den, 2) computed in integers.
inline double percent2(std::size_t num, std::size_t den) {
  if (den == 0 || num == 0) return 0.0;
  const auto n = static_cast<unsigned long long>(num);
  const auto d = static_cast<unsigned long long>(den);
  const unsigned long long hundredths = (20000ULL * n + d) / (2ULL * d);
  return static_cast<double>(hundredths) / 100.0;
}

}  // namespace detail

inline Metrics metrics_of(const Counts& c) {
  Metrics m;
  m.precision = detail::percent2(c.tp, c.tp + c.fp);
  m.recall = detail::percent2(c.tp, c.tp + c.fn);
  // harmonic mean of the unrounded P and R: 2tp / (2tp + fp + fn)
  m.f1 = detail::percent2(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  return m;
}

struct EvalCounts {
  std::map<std::string, Counts> per_label;

  Counts micro() const {
    Counts total;
    for (const auto& [label, c] : per_label) total += c;
    return total;
  }
  EvalCounts& operator+=(const EvalCounts& o) {
    for (const auto& [label, c] : o.per_label) per_label[label] += c;
    return *this;
  }
};

/// Set comparison of exact (start, end, label) triples. Duplicates count once.
inline EvalCounts score_counts(const std::vector<TokenSpan>& gold, const std::vector<TokenSpan>& pred) {
  const std::set<TokenSpan> g(gold.begin(), gold.end());
  const std::set<TokenSpan> p(pred.begin(), pred.end());
  EvalCounts out;
  for (const auto& s : g) {
    auto& c = out.per_label[s.label];
    if (p.count(s))
      ++c.tp;
    else
      ++c.fn;
  }
  for (const auto& s : p)
    if (!g.count(s)) ++out.per_label[s.label].fp;
  return out;
}

enum class Condition { normal, uniformized };

constexpr std::string_view to_string(Condition c) noexcept {
  return c == Condition::normal ? "normal" : "uniformized";
}

struct LabelScore {
  Counts counts;
  Metrics metrics;
};

struct EvalReport {
  Condition condition = Condition::normal;
  std::map<std::string, LabelScore> per_label;
  LabelScore micro;
  std::optional<Metrics> macro;
  std::size_t documents = 0;
  std::size_t gold_spans = 0;
  std::size_t predicted_spans = 0;
  std::vector<std::string> warnings;
};

/// Unweighted mean of per-label metrics, rounded to two decimals.
inline Metrics macro_of(const std::map<std::string, LabelScore>& per_label) {
  Metrics m;
  if (per_label.empty()) return m;
  for (const auto& [label, s] : per_label) {
    m.precision += s.metrics.precision;
    m.recall += s.metrics.recall;
    m.f1 += s.metrics.f1;
  }
  const double n = static_cast<double>(per_label.size());
  auto r2 = [](double x) { return std::round(x * 100.0) / 100.0; };
  return {r2(m.precision / n), r2(m.recall / n), r2(m.f1 / n)};
}

inline EvalReport make_report(const EvalCounts& counts, Condition condition = Condition::normal,
                              bool with_macro = false) {
  EvalReport r;
  r.condition = condition;
  for (const auto& [label, c] : counts.per_label) {
    r.per_label[label] = {c, metrics_of(c)};
    r.gold_spans += c.tp + c.fn;
    r.predicted_spans += c.tp + c.fp;
  }
  r.micro.counts = counts.micro();
  r.micro.metrics = metrics_of(r.micro.counts);
  if (with_macro) r.macro = macro_of(r.per_label);
  return r;
}

inline EvalReport score(const std::vector<TokenSpan>& gold, const std::vector<TokenSpan>& pred,
                        bool with_macro = false) {
  return make_report(score_counts(gold, pred), Condition::normal, with_macro);
}

/// Scores character-offset spans of one document after mapping both sides
/// onto the document's word tokens.
inline EvalCounts score_document(const Document& doc, const std::vector<EntitySpan>& gold,
                                 const std::vector<EntitySpan>& pred) {
  const auto tokens = tokenize(doc.text);
  return score_counts(align_to_tokens(tokens, gold), align_to_tokens(tokens, pred));
}

struct ConditionReports {
  EvalReport normal;
  EvalReport uniformized;
  Metrics delta;  // uniformized - normal, micro
};

using DetectionPipeline = std::function<DetectionResult(const Document&)>;

inline Metrics metrics_delta(const Metrics& from, const Metrics& to) {
  auto r2 = [](double x) { return std::round(x * 100.0) / 100.0; };
  return {r2(to.precision - from.precision), r2(to.recall - from.recall), r2(to.f1 - from.f1)};
}

/// Normal scores the merged detections; Uniformized scores
/// uniformize(detections). Both run on identical documents.
inline ConditionReports evaluate_conditions(const std::vector<Document>& corpus, const DetectionPipeline& pipeline,
                                            const UniformizeConfig& ucfg = {}, bool with_macro = false) {
  EvalCounts normal, uniform;
  std::vector<std::string> warnings;
  for (const auto& doc : corpus) {
    auto result = pipeline(doc);
    for (const auto& w : result.warnings) warnings.push_back(doc.id + ": " + w);
    normal += score_document(doc, doc.gold, result.spans);
    uniform += score_document(doc, doc.gold, uniformize(doc, result.spans, ucfg));
  }
  ConditionReports out;
  out.normal = make_report(normal, Condition::normal, with_macro);
  out.uniformized = make_report(uniform, Condition::uniformized, with_macro);
  out.normal.documents = out.uniformized.documents = corpus.size();
  out.normal.warnings = out.uniformized.warnings = warnings;
  out.delta = metrics_delta(out.normal.micro.metrics, out.uniformized.micro.metrics);
  return out;
}

struct TableRow {
  std::string name;
  EvalReport normal;
  EvalReport uniformized;
};

/// Plain-text table: one row per configuration, Normal | Uniformizing
/// column groups with Precision / Recall / F1-Score.
inline std::string format_table(const std::vector<TableRow>& rows) {
  std::size_t name_w = 5;
  for (const auto& r : rows) name_w = std::max(name_w, r.name.size());
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
  const std::string group_n = "Normal", group_u = "Uniformizing";
  const std::size_t group_w = 3 * 10 + 2;
  os << pad("", name_w) << " | " << pad(group_n, group_w) << " | " << group_u << "\n";
  os << pad("Model", name_w) << " | " << std::setw(10) << "Precision" << std::setw(10) << "Recall" << std::setw(12)
     << "F1-Score"
     << " | " << std::setw(10) << "Precision" << std::setw(10) << "Recall" << std::setw(12) << "F1-Score"
     << "\n";
  os << std::string(name_w, '-') << "-+-" << std::string(group_w, '-') << "-+-" << std::string(group_w, '-') << "\n";
  for (const auto& r : rows) {
    const auto& n = r.normal.micro.metrics;
    const auto& u = r.uniformized.micro.metrics;
    os << pad(r.name, name_w) << " | " << std::setw(10) << n.precision << std::setw(10) << n.recall << std::setw(12)
       << n.f1 << " | " << std::setw(10) << u.precision << std::setw(10) << u.recall << std::setw(12) << u.f1 << "\n";
  }
  return os.str();
}

}  // namespace anon
