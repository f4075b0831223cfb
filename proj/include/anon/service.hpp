#pragma once

// HTTP service for the review workflow. All responses are JSON except the
// HTML export. Every mutation takes the project's current version token.

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "anon/detectors.hpp"
#include "anon/error.hpp"
#include "anon/evaluator.hpp"
#include "anon/http_client.hpp"
#include "anon/json_io.hpp"
#include "anon/project.hpp"
#include "anon/uniformizer.hpp"

namespace anon {

struct ServiceConfig {
  std::filesystem::path project_dir = "projects";
  DetectorConfig detectors = DetectorConfig::defaults();
  UniformizeConfig uniformize;
  std::optional<std::filesystem::path> openapi_path;
  std::shared_ptr<LabelingClient> client;  // overrides detectors.model_endpoint
};

/// Error kind and HTTP status for an exception escaping a handler.
inline std::pair<std::string, int> classify_error(const std::exception& e) {
  if (dynamic_cast<const VersionConflict*>(&e)) return {"VersionConflict", 409};
  if (dynamic_cast<const OverlapConflict*>(&e)) return {"OverlapConflict", 409};
  if (dynamic_cast<const NotFound*>(&e)) return {"NotFound", 404};
  if (dynamic_cast<const DetectorUnavailable*>(&e)) return {"DetectorUnavailable", 502};
  if (dynamic_cast<const ProtocolViolation*>(&e)) return {"ProtocolViolation", 502};
  if (dynamic_cast<const IntegrityError*>(&e)) return {"IntegrityError", 500};
  if (dynamic_cast<const EmptyDocument*>(&e)) return {"EmptyDocument", 422};
  if (dynamic_cast<const SpanOutOfBounds*>(&e)) return {"SpanOutOfBounds", 422};
  if (dynamic_cast<const SchemaError*>(&e)) return {"SchemaError", 422};
  if (dynamic_cast<const ValidationError*>(&e)) return {"ValidationError", 422};
  if (dynamic_cast<const nlohmann::json::exception*>(&e)) return {"ValidationError", 422};
  if (dynamic_cast<const IoError*>(&e)) return {"IoError", 500};
  return {"InternalError", 500};
}

class Service {
public:
  explicit Service(ServiceConfig cfg) : cfg_(std::move(cfg)), store_(cfg_.project_dir) {
    cfg_.detectors.validate();
    if (cfg_.openapi_path) openapi_ = read_text_file(cfg_.openapi_path->string());
    routes();
  }

  httplib::Server& server() noexcept { return server_; }
  ProjectStore& store() noexcept { return store_; }

  bool listen(const std::string& host, int port) { return server_.listen(host, port); }
  int bind_to_any_port(const std::string& host) { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() const { server_.wait_until_ready(); }

  /// Project view returned by GET /documents/{id}.
  static nlohmann::json view(const Project& p) {
    nlohmann::json map = nlohmann::json::array();
    for (const auto& [s, r] : p.replacement_map) map.push_back({{"surface", u8(s)}, {"replacement", u8(r)}});
    return {{"id", p.document.id},
            {"version", p.version},
            {"document", to_json(p.document)},
            {"suggestions", suggestions_json(p)},
            {"replacement_map", std::move(map)}};
  }

  static nlohmann::json suggestions_json(const Project& p) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& s : p.suggestions) out.push_back(to_json(s));
    return out;
  }

  static nlohmann::json report(const Project& p) {
    std::map<std::string, std::size_t> by_status{{"pending", 0}, {"accepted", 0}, {"rejected", 0}}, by_source;
    for (const auto& s : p.suggestions) {
      ++by_status[std::string(to_string(s.status))];
      ++by_source[std::string(to_string(s.entity.source))];
    }
    nlohmann::json j{{"id", p.document.id},
                     {"version", p.version},
                     {"suggestions", p.suggestions.size()},
                     {"by_status", by_status},
                     {"by_source", by_source},
                     {"audit_events", p.audit.size()},
                     {"evaluation", nullptr}};
    if (!p.document.gold.empty()) {
      auto r = make_report(score_document(p.document, p.document.gold, accepted_spans(p)));
      r.documents = 1;
      j["evaluation"] = to_json(r);
    }
    return j;
  }

private:
  static nlohmann::json body_of(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    try {
      auto j = nlohmann::json::parse(req.body);
      if (!j.is_object()) throw ValidationError("request body must be a JSON object");
      return j;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("request body is not JSON: ") + e.what());
    }
  }

  static std::uint64_t version_of(const nlohmann::json& body) {
    auto it = body.find("version");
    if (it == body.end() || !it->is_number_unsigned()) throw ValidationError("mutation requires integer 'version'");
    return it->get<std::uint64_t>();
  }

  static Actor actor_of(const nlohmann::json& body) {
    Actor a;
    if (auto it = body.find("actor"); it != body.end() && it->is_string()) a.id = it->get<std::string>();
    a.at = now_iso8601();
    return a;
  }

  static void send_json(httplib::Response& res, const nlohmann::json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, const std::exception& e) {
    const auto [kind, status] = classify_error(e);
    nlohmann::json j{{"error", kind}, {"message", e.what()}};
    if (auto vc = dynamic_cast<const VersionConflict*>(&e)) j["current_version"] = vc->actual();
    send_json(res, j, status);
  }

  /// Wraps a handler so exceptions become JSON error responses.
  template <typename Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const std::exception& e) {
        send_error(res, e);
      }
    };
  }

  static std::string document_of_suggestion(const std::string& sid) {
    const auto dash = sid.rfind('-');
    if (dash == std::string::npos || dash == 0) throw NotFound("unknown suggestion '" + sid + "'");
    return sid.substr(0, dash);
  }

  std::unique_ptr<LabelingClient> make_client() const {
    if (cfg_.detectors.model_endpoint)
      return std::make_unique<HttpLabelingClient>(*cfg_.detectors.model_endpoint, cfg_.detectors.timeout_ms);
    return nullptr;
  }

  void routes() {
    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, {{"status", "ok"}});
    });

    server_.Get("/openapi.json", guarded([this](const httplib::Request&, httplib::Response& res) {
      if (openapi_.empty()) throw NotFound("no API description configured");
      res.set_content(openapi_, "application/json");
    }));

    server_.Post("/documents", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = body_of(req);
      if (!body.contains("language")) throw ValidationError("missing field 'language'");
      if (!body.contains("text")) throw ValidationError("missing field 'text'");
      auto j = body;
      if (j["text"].is_string()) j["text"] = normalize_line_endings(j["text"].get<std::string>());
      if (j["text"].is_string() &&
          std::all_of(j["text"].get_ref<const std::string&>().begin(), j["text"].get_ref<const std::string&>().end(),
                      [](char c) { return std::isspace(static_cast<unsigned char>(c)); }))
        throw EmptyDocument();
      const auto doc = document_from_json(j);
      const auto p = store_.create(doc);
      send_json(res, view(p), 201);
    }));

    server_.Get(R"(/documents/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, view(store_.get(req.matches[1])));
    }));

    server_.Get(R"(/documents/([^/]+)/suggestions)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const auto p = store_.get(req.matches[1]);
                  send_json(res, {{"id", p.document.id}, {"version", p.version}, {"suggestions", suggestions_json(p)}});
                }));

    server_.Post(R"(/documents/([^/]+)/detect)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = body_of(req);
      const auto expected = version_of(body);
      const auto kinds = parse_detectors(req.has_param("detectors") ? req.get_param_value("detectors")
                                                                    : std::string("regex,conventional"));
      DetectionResult result;
      const auto p = store_.update(req.matches[1], [&](Project p) {
        detail::check_version(p, expected);
        std::unique_ptr<LabelingClient> owned;
        LabelingClient* client = cfg_.client.get();
        if (!client) {
          owned = make_client();
          client = owned.get();
        }
        result = run_detectors(p.document, cfg_.detectors, kinds, client);
        return add_suggestions(std::move(p), result.spans, expected);
      });
      nlohmann::json detectors = nlohmann::json::array();
      for (const auto& d : result.detectors)
        detectors.push_back({{"name", d.name}, {"count", d.count}, {"ok", d.ok}, {"error", d.error}});
      nlohmann::json j{{"id", p.document.id},         {"version", p.version},          {"suggestions", suggestions_json(p)},
                       {"warnings", result.warnings}, {"partial", result.partial}, {"detectors", std::move(detectors)}};
      if (result.partial) j["error"] = "DetectorUnavailable";
      send_json(res, j, result.partial ? 502 : 200);
    }));

    server_.Post(R"(/documents/([^/]+)/uniformize)",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                   const auto body = body_of(req);
                   const auto expected = version_of(body);
                   const bool accept = body.value("accept", false);
                   const auto actor = actor_of(body);
                   std::size_t added = 0;
                   const auto p = store_.update(req.matches[1], [&](Project p) {
                     detail::check_version(p, expected);
                     std::set<std::string> before;
                     for (const auto& s : p.suggestions) before.insert(s.id);
                     std::vector<EntitySpan> fresh;
                     for (auto& s : uniformize(p.document, accepted_spans(p), cfg_.uniformize))
                       if (s.source == Source::uniformized) fresh.push_back(std::move(s));
                     p = add_suggestions(std::move(p), fresh);
                     std::vector<std::string> ids;
                     for (const auto& s : p.suggestions)
                       if (!before.count(s.id)) ids.push_back(s.id);
                     added = ids.size();
                     if (accept) {
                       for (const auto& id : ids) p = apply_decision(std::move(p), id, Decision::accept, actor);
                     }
                     return p;
                   });
                   send_json(res, {{"id", p.document.id},
                                   {"version", p.version},
                                   {"added", added},
                                   {"suggestions", suggestions_json(p)}});
                 }));

    server_.Post(R"(/suggestions/([^/]+)/decision)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string sid = req.matches[1];
      const auto body = body_of(req);
      const auto expected = version_of(body);
      if (!body.contains("decision") || !body["decision"].is_string())
        throw ValidationError("missing field 'decision' (accept|reject)");
      const auto decision = parse_decision(body["decision"].get<std::string>());
      const auto actor = actor_of(body);
      const auto p = store_.update(document_of_suggestion(sid), [&](Project p) {
        return apply_decision(std::move(p), sid, decision, actor, expected);
      });
      send_json(res, {{"version", p.version}, {"suggestion", to_json(*p.find(sid))}});
    }));

    server_.Post(R"(/suggestions/([^/]+)/replacement)",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                   const std::string sid = req.matches[1];
                   const auto body = body_of(req);
                   const auto expected = version_of(body);
                   if (!body.contains("replacement") || !body["replacement"].is_string())
                     throw ValidationError("missing field 'replacement'");
                   const auto replacement = unicode::decode_utf8(body["replacement"].get<std::string>());
                   const auto actor = actor_of(body);
                   const auto p = store_.update(document_of_suggestion(sid), [&](Project p) {
                     return edit_replacement(std::move(p), sid, replacement, actor, expected);
                   });
                   send_json(res, {{"version", p.version}, {"suggestions", suggestions_json(p)}});
                 }));

    server_.Post(R"(/documents/([^/]+)/manual-span)",
                 guarded([this](const httplib::Request& req, httplib::Response& res) {
                   const auto body = body_of(req);
                   const auto expected = version_of(body);
                   for (const char* f : {"start", "end"})
                     if (!body.contains(f) || !body[f].is_number_unsigned())
                       throw ValidationError(std::string("missing non-negative integer '") + f + "'");
                   if (!body.contains("label") || !body["label"].is_string())
                     throw ValidationError("missing field 'label'");
                   const CharSpan span{body["start"].get<std::size_t>(), body["end"].get<std::size_t>()};
                   const auto label = body["label"].get<std::string>();
                   const auto replacement = unicode::decode_utf8(body.value("replacement", std::string()));
                   const auto actor = actor_of(body);
                   std::string sid;
                   const auto p = store_.update(req.matches[1], [&](Project p) {
                     sid = detail::suggestion_id(p, p.next_suggestion);
                     return add_manual(std::move(p), span, label, replacement, actor, expected);
                   });
                   send_json(res, {{"version", p.version}, {"suggestion", to_json(*p.find(sid))}}, 201);
                 }));

    server_.Get(R"(/documents/([^/]+)/export)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto format = req.has_param("format") ? req.get_param_value("format") : std::string("txt");
      const auto p = store_.get(req.matches[1]);
      std::vector<std::string> warnings;
      const auto anon = export_project(p, &warnings);
      if (format == "html") {
        res.set_content(export_html(anon), "text/html; charset=utf-8");
      } else if (format == "txt") {
        auto j = to_json(anon);
        j["version"] = p.version;
        j["warnings"] = warnings;
        send_json(res, j);
      } else {
        throw ValidationError("format must be 'txt' or 'html'");
      }
    }));

    server_.Get(R"(/documents/([^/]+)/report)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, report(store_.get(req.matches[1])));
    }));
  }

  ServiceConfig cfg_;
  ProjectStore store_;
  std::string openapi_;
  httplib::Server server_;
};

}  // namespace anon
