#pragma once

// JSON forms of the domain types and line-oriented (JSONL) file helpers.
// All objects serialize with sorted keys, so dumps are canonical.

#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anon/corpus.hpp"
#include "anon/dataset.hpp"
#include "anon/detectors.hpp"
#include "anon/error.hpp"
#include "anon/evaluator.hpp"
#include "anon/redactor.hpp"

namespace anon {

using nlohmann::json;

inline std::string u8(std::u32string_view s) { return unicode::encode_utf8(s); }

// --- field access with schema errors --------------------------------------

namespace detail {

inline const json& require(const json& obj, const char* field, std::size_t line) {
  if (!obj.is_object()) throw SchemaError(line, field, "expected a JSON object");
  auto it = obj.find(field);
  if (it == obj.end()) throw SchemaError(line, field, "missing");
  return *it;
}

inline std::size_t require_offset(const json& obj, const char* field, std::size_t line) {
  const auto& v = require(obj, field, line);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    throw SchemaError(line, field, "expected a non-negative integer");
  return v.get<std::size_t>();
}

inline std::string require_string(const json& obj, const char* field, std::size_t line) {
  const auto& v = require(obj, field, line);
  if (!v.is_string()) throw SchemaError(line, field, "expected a string");
  return v.get<std::string>();
}

}  // namespace detail

// --- spans ------------------------------------------------------------------

inline json to_json(const EntitySpan& s) {
  return json{{"start", s.span.start}, {"end", s.span.end},          {"label", s.label},
              {"surface", u8(s.surface)}, {"source", std::string(to_string(s.source))},
              {"confidence", s.confidence}};
}

/// Reads a span against `doc`; the surface is taken from the document and,
/// if present in the JSON, must agree with it.
inline EntitySpan span_from_json(const json& j, const Document& doc, std::size_t line = 0,
                                 Source default_source = Source::gold) {
  const auto start = detail::require_offset(j, "start", line);
  const auto end = detail::require_offset(j, "end", line);
  if (start >= end || end > doc.text.size())
    throw SchemaError(line, "end", "span [" + std::to_string(start) + "," + std::to_string(end) +
                                       ") invalid for text of length " + std::to_string(doc.text.size()));
  EntitySpan s;
  s.span = {start, end};
  s.label = detail::require_string(j, "label", line);
  if (s.label.empty()) throw SchemaError(line, "label", "empty label");
  s.surface = span_text(doc, s.span);
  if (auto it = j.find("surface"); it != j.end()) {
    if (!it->is_string() || unicode::decode_utf8(it->get<std::string>()) != s.surface)
      throw SchemaError(line, "surface", "does not match document text at the span");
  }
  s.source = default_source;
  if (auto it = j.find("source"); it != j.end()) {
    try {
      s.source = parse_source(it->get<std::string>());
    } catch (const std::exception& e) {
      throw SchemaError(line, "source", e.what());
    }
  }
  s.confidence = j.value("confidence", 1.0);
  if (s.confidence < 0.0 || s.confidence > 1.0) throw SchemaError(line, "confidence", "must lie in [0, 1]");
  return s;
}

// --- documents ----------------------------------------------------------------

inline json to_json(const Document& doc) {
  json sentences = json::array();
  for (const auto& s : doc.sentences) sentences.push_back({s.start, s.end});
  json gold = json::array();
  for (const auto& g : doc.gold) gold.push_back({{"start", g.span.start}, {"end", g.span.end}, {"label", g.label}});
  return json{{"id", doc.id},
              {"language", std::string(to_string(doc.language))},
              {"text", u8(doc.text)},
              {"sentences", std::move(sentences)},
              {"gold", std::move(gold)}};
}

inline Document document_from_json(const json& j, std::size_t line = 0, const LabelSet* labels = nullptr) {
  Document doc;
  try {
    doc.language = parse_language(detail::require_string(j, "language", line));
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    throw SchemaError(line, "language", e.what());
  }
  const auto text = detail::require_string(j, "text", line);
  try {
    doc.text = unicode::decode_utf8(text);
  } catch (const std::exception& e) {
    throw SchemaError(line, "text", e.what());
  }
  if (std::all_of(doc.text.begin(), doc.text.end(), unicode::is_space))
    throw SchemaError(line, "text", "document is empty");
  doc.id = j.contains("id") ? detail::require_string(j, "id", line) : document_id(doc.language, text);
  if (doc.id.empty()) throw SchemaError(line, "id", "empty id");

  if (auto it = j.find("sentences"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw SchemaError(line, "sentences", "expected an array of [start,end] pairs");
    std::size_t prev_end = 0;
    for (const auto& pair : *it) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned() || !pair[1].is_number_unsigned())
        throw SchemaError(line, "sentences", "expected [start,end] pairs of non-negative integers");
      CharSpan s{pair[0].get<std::size_t>(), pair[1].get<std::size_t>()};
      if (s.start >= s.end || s.end > doc.text.size() || s.start < prev_end)
        throw SchemaError(line, "sentences", "spans must be non-empty, sorted, disjoint and inside the text");
      prev_end = s.end;
      doc.sentences.push_back(s);
    }
  } else {
    doc.sentences = segment_sentences(doc.text, doc.language);
  }

  std::vector<EntitySpan> gold;
  if (auto it = j.find("gold"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw SchemaError(line, "gold", "expected an array");
    for (const auto& g : *it) {
      auto s = span_from_json(g, doc, line, Source::gold);
      if (labels && !labels->contains(s.label)) throw SchemaError(line, "label", "label '" + s.label + "' not in inventory");
      gold.push_back(std::move(s));
    }
  }
  attach_gold(doc, std::move(gold));
  return doc;
}

// --- JSONL files --------------------------------------------------------------

/// Calls `fn(json, line_number)` for every non-blank line.
inline void read_jsonl(const std::string& path, const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(n, "<line>", std::string("invalid JSON: ") + e.what());
    }
    fn(j, n);
  }
}

inline std::vector<Document> read_documents(const std::string& path, const LabelSet* labels = nullptr) {
  std::vector<Document> docs;
  read_jsonl(path, [&](const json& j, std::size_t line) { docs.push_back(document_from_json(j, line, labels)); });
  return docs;
}

inline std::string dump_line(const json& j) { return j.dump(-1, ' ', false) + "\n"; }

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed for " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --- training data and stats -----------------------------------------------------

inline json to_json(const TrainingExample& ex) {
  return json{{"doc_id", ex.doc_id},
              {"sentence_index", ex.sentence_index},
              {"window", {ex.window.begin, ex.window.end}},
              {"tokens", ex.tokens},
              {"labels", ex.labels}};
}

inline TrainingExample training_example_from_json(const json& j, std::size_t line = 0) {
  TrainingExample ex;
  ex.doc_id = detail::require_string(j, "doc_id", line);
  ex.sentence_index = detail::require_offset(j, "sentence_index", line);
  const auto& w = detail::require(j, "window", line);
  if (!w.is_array() || w.size() != 2) throw SchemaError(line, "window", "expected [start,end]");
  ex.window = {w[0].get<std::size_t>(), w[1].get<std::size_t>()};
  ex.tokens = detail::require(j, "tokens", line).get<std::vector<std::string>>();
  ex.labels = detail::require(j, "labels", line).get<std::vector<std::string>>();
  if (ex.tokens.size() != ex.labels.size()) throw SchemaError(line, "labels", "length differs from tokens");
  return ex;
}

inline json to_json(const PrepConfig& c) {
  return json{{"max_seq_len", c.max_seq_len},
              {"truncation_stride_ratio", c.truncation_stride_ratio},
              {"neg_to_pos_ratio", c.neg_to_pos_ratio},
              {"split_fractions", c.split_fractions},
              {"rng_seed", c.rng_seed},
              {"per_language_sampling", c.per_language_sampling}};
}

inline json to_json(const PrepStats& s) {
  return json{{"positives", s.positives},
              {"negatives_total", s.negatives_total},
              {"negatives_kept", s.negatives_kept},
              {"cross_sentence_dropped", s.cross_sentence_dropped},
              {"snapped", s.snapped},
              {"uncovered_dropped", s.uncovered_dropped}};
}

inline json to_json(const Histogram& h) {
  return json{{"bin_edges", h.bin_edges}, {"counts", h.counts}, {"underflow", h.underflow}, {"overflow", h.overflow}};
}

inline json to_json(const CorpusStats& stats) {
  json docs = json::array();
  for (const auto& d : stats.documents)
    docs.push_back({{"doc_id", d.doc_id},
                    {"language", std::string(to_string(d.language))},
                    {"tokens", d.tokens},
                    {"anonymized_tokens", d.anonymized_tokens},
                    {"entities", d.entities},
                    {"anonymized_entities", d.anonymized_entities}});
  json langs = json::object();
  for (const auto& [lang, ls] : stats.languages) {
    langs[std::string(to_string(lang))] = {
        {"documents", ls.documents},
        {"totals",
         {{"tokens", ls.tokens},
          {"anonymized_tokens", ls.anonymized_tokens},
          {"entities", ls.entities},
          {"anonymized_entities", ls.anonymized_entities}}},
        {"histograms",
         {{"tokens", to_json(ls.tokens_hist)},
          {"anonymized_tokens", to_json(ls.anonymized_tokens_hist)},
          {"entities", to_json(ls.entities_hist)},
          {"anonymized_entities", to_json(ls.anonymized_entities_hist)}}}};
  }
  return json{{"documents", std::move(docs)}, {"languages", std::move(langs)}};
}

// --- evaluation -------------------------------------------------------------------

inline json to_json(const Counts& c) { return json{{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}}; }

inline json to_json(const Metrics& m) {
  return json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

inline json to_json(const EvalReport& r) {
  json per_label = json::object();
  for (const auto& [label, s] : r.per_label)
    per_label[label] = {{"counts", to_json(s.counts)}, {"metrics", to_json(s.metrics)}};
  json j{{"condition", std::string(to_string(r.condition))},
         {"per_label", std::move(per_label)},
         {"micro", {{"counts", to_json(r.micro.counts)}, {"metrics", to_json(r.micro.metrics)}}},
         {"corpus", {{"documents", r.documents}, {"gold_spans", r.gold_spans}, {"predicted_spans", r.predicted_spans}}},
         {"warnings", r.warnings}};
  if (r.macro) j["macro"] = to_json(*r.macro);
  return j;
}

inline json to_json(const ConditionReports& r) {
  return json{{"normal", to_json(r.normal)}, {"uniformized", to_json(r.uniformized)}, {"delta", to_json(r.delta)}};
}

// --- detection output -------------------------------------------------------------

/// One suggestions line: {doc_id, spans, warnings, partial, detectors}.
/// Timings are left out so repeated runs are byte-identical.
inline json detection_to_json(const std::string& doc_id, const DetectionResult& r) {
  json spans = json::array();
  for (const auto& s : r.spans) spans.push_back(to_json(s));
  json detectors = json::array();
  for (const auto& d : r.detectors)
    detectors.push_back({{"name", d.name}, {"count", d.count}, {"ok", d.ok}, {"error", d.error}});
  return json{{"doc_id", doc_id}, {"spans", std::move(spans)}, {"warnings", r.warnings},
              {"partial", r.partial}, {"detectors", std::move(detectors)}};
}

/// Reads spans of a suggestions line against its document.
inline std::vector<EntitySpan> spans_from_json(const json& j, const Document& doc, std::size_t line = 0) {
  const auto& arr = detail::require(j, "spans", line);
  if (!arr.is_array()) throw SchemaError(line, "spans", "expected an array");
  std::vector<EntitySpan> out;
  for (const auto& s : arr) out.push_back(span_from_json(s, doc, line, Source::model));
  sort_spans(out);
  return out;
}

// --- detector configuration ---------------------------------------------------------

/// Overlays the fields present in `j` onto DetectorConfig::defaults().
inline DetectorConfig detector_config_from_json(const json& j) {
  auto c = DetectorConfig::defaults();
  auto lang_map = [](const json& m) {
    std::map<Language, std::vector<std::string>> out;
    for (auto it = m.begin(); it != m.end(); ++it) out[parse_language(it.key())] = it->get<std::vector<std::string>>();
    return out;
  };
  try {
    if (j.contains("regex_rules")) {
      c.regex_rules.clear();
      for (const auto& r : j["regex_rules"])
        c.regex_rules.push_back({r.at("pattern").get<std::string>(), r.at("label").get<std::string>(),
                                 r.value("case_insensitive", false)});
    }
    if (j.contains("gazetteer")) c.gazetteer = j["gazetteer"].get<std::map<std::string, std::vector<std::string>>>();
    if (j.contains("rubrum_markers")) c.rubrum_markers = lang_map(j["rubrum_markers"]);
    if (j.contains("party_cues")) c.party_cues = lang_map(j["party_cues"]);
    if (j.contains("edge_stopwords")) c.edge_stopwords = lang_map(j["edge_stopwords"]);
    if (j.contains("org_suffixes")) c.org_suffixes = j["org_suffixes"].get<std::vector<std::string>>();
    if (j.contains("model_endpoint") && !j["model_endpoint"].is_null())
      c.model_endpoint = j["model_endpoint"].get<std::string>();
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    c.min_confidence = j.value("min_confidence", c.min_confidence);
    c.regex_confidence = j.value("regex_confidence", c.regex_confidence);
    c.gazetteer_confidence = j.value("gazetteer_confidence", c.gazetteer_confidence);
    c.conventional_confidence = j.value("conventional_confidence", c.conventional_confidence);
    c.model_batch_size = j.value("model_batch_size", c.model_batch_size);
    c.rubrum_fallback_fraction = j.value("rubrum_fallback_fraction", c.rubrum_fallback_fraction);
    c.windowing.max_seq_len = j.value("max_seq_len", c.windowing.max_seq_len);
    c.windowing.truncation_stride_ratio = j.value("truncation_stride_ratio", c.windowing.truncation_stride_ratio);
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("detector config: ") + e.what());
  }
  c.validate();
  return c;
}

inline json to_json(const DetectorConfig& c) {
  auto lang_map = [](const std::map<Language, std::vector<std::string>>& m) {
    json out = json::object();
    for (const auto& [lang, v] : m) out[std::string(to_string(lang))] = v;
    return out;
  };
  json rules = json::array();
  for (const auto& r : c.regex_rules)
    rules.push_back({{"pattern", r.pattern}, {"label", r.label}, {"case_insensitive", r.case_insensitive}});
  return json{{"regex_rules", std::move(rules)},
              {"gazetteer", c.gazetteer},
              {"rubrum_markers", lang_map(c.rubrum_markers)},
              {"party_cues", lang_map(c.party_cues)},
              {"edge_stopwords", lang_map(c.edge_stopwords)},
              {"org_suffixes", c.org_suffixes},
              {"model_endpoint", c.model_endpoint ? json(*c.model_endpoint) : json(nullptr)},
              {"timeout_ms", c.timeout_ms},
              {"min_confidence", c.min_confidence},
              {"regex_confidence", c.regex_confidence},
              {"gazetteer_confidence", c.gazetteer_confidence},
              {"conventional_confidence", c.conventional_confidence},
              {"model_batch_size", c.model_batch_size},
              {"rubrum_fallback_fraction", c.rubrum_fallback_fraction},
              {"max_seq_len", c.windowing.max_seq_len},
              {"truncation_stride_ratio", c.windowing.truncation_stride_ratio}};
}

// --- anonymized output ----------------------------------------------------------------

inline json to_json(const AnonymizedDocument& a) {
  json reps = json::array();
  for (const auto& r : a.replacements)
    reps.push_back({{"original", {r.original.start, r.original.end}},
                    {"replaced", {r.replaced.start, r.replaced.end}},
                    {"surface_id", r.surface_id},
                    {"surface", u8(r.surface)},
                    {"placeholder", u8(r.placeholder)},
                    {"label", r.label},
                    {"status", r.status}});
  return json{{"doc_id", a.doc_id}, {"text", u8(a.text)}, {"replacements", std::move(reps)}};
}

inline json to_json(const ReplacementMap& m) {
  json entries = json::array();
  for (const auto& [surface, placeholder] : m.entries())
    entries.push_back({{"surface", u8(surface)}, {"placeholder", u8(placeholder)}});
  return json{{"policy", std::string(to_string(m.policy()))}, {"entries", std::move(entries)}};
}

}  // namespace anon
