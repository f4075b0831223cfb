#pragma once

// NER inference wire protocol.
//
//   POST /v1/label
//   request:  {"language": "de", "sentences": [{"tokens": ["..", ..]}, ..]}
//   response: {"sentences": [{"labels": ["B-PER", ..], "confidences": [0.9, ..]}, ..]}
//
// The response must carry one entry per request sentence and one label per
// token; confidences, when present, are parallel to labels.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anon/error.hpp"
#include "anon/types.hpp"

namespace anon {

struct LabelRequest {
  Language language = Language::de;
  std::vector<std::vector<std::string>> sentences;  // UTF-8 tokens
};

struct SentenceLabels {
  std::vector<std::string> labels;
  std::vector<double> confidences;
};

struct LabelResponse {
  std::vector<SentenceLabels> sentences;
};

inline nlohmann::json to_json(const LabelRequest& req) {
  nlohmann::json j;
  j["language"] = std::string(to_string(req.language));
  j["sentences"] = nlohmann::json::array();
  for (const auto& s : req.sentences) j["sentences"].push_back({{"tokens", s}});
  return j;
}

inline LabelRequest parse_label_request(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("sentences") || !j["sentences"].is_array())
    throw ValidationError("request must be an object with a 'sentences' array");
  LabelRequest req;
  req.language = parse_language(j.value("language", "de"));
  for (const auto& s : j["sentences"]) {
    if (!s.is_object() || !s.contains("tokens") || !s["tokens"].is_array())
      throw ValidationError("each sentence needs a 'tokens' array");
    req.sentences.push_back(s["tokens"].get<std::vector<std::string>>());
  }
  return req;
}

inline nlohmann::json to_json(const LabelResponse& resp) {
  nlohmann::json j;
  j["sentences"] = nlohmann::json::array();
  for (const auto& s : resp.sentences) j["sentences"].push_back({{"labels", s.labels}, {"confidences", s.confidences}});
  return j;
}

/// Parses a response body and checks it against the request shape.
inline LabelResponse parse_label_response(const nlohmann::json& j, const LabelRequest& req) {
  try {
    if (!j.is_object() || !j.contains("sentences") || !j["sentences"].is_array())
      throw ProtocolViolation("response lacks a 'sentences' array");
    LabelResponse resp;
    for (const auto& s : j["sentences"]) {
      SentenceLabels sl;
      if (!s.is_object() || !s.contains("labels")) throw ProtocolViolation("sentence entry lacks 'labels'");
      sl.labels = s["labels"].get<std::vector<std::string>>();
      if (s.contains("confidences")) sl.confidences = s["confidences"].get<std::vector<double>>();
      resp.sentences.push_back(std::move(sl));
    }
    if (resp.sentences.size() != req.sentences.size())
      throw ProtocolViolation("response has " + std::to_string(resp.sentences.size()) + " sentences, request had " +
                              std::to_string(req.sentences.size()));
    for (std::size_t i = 0; i < req.sentences.size(); ++i) {
      const auto& sl = resp.sentences[i];
      if (sl.labels.size() != req.sentences[i].size())
        throw ProtocolViolation("sentence " + std::to_string(i) + ": " + std::to_string(sl.labels.size()) +
                                " labels for " + std::to_string(req.sentences[i].size()) + " tokens");
      if (!sl.confidences.empty() && sl.confidences.size() != sl.labels.size())
        throw ProtocolViolation("sentence " + std::to_string(i) + ": confidences not parallel to labels");
    }
    return resp;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolViolation(std::string("malformed response: ") + e.what());
  }
}

/// Anything that can label token sequences: an HTTP endpoint, a recorded
/// response, a test double.
class LabelingClient {
public:
  virtual ~LabelingClient() = default;
  virtual LabelResponse label(const LabelRequest& request) = 0;
};

}  // namespace anon
