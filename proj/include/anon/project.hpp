#pragma once

// Review sessions: one project per ruling holding suggestions, decisions,
// the surface -> replacement table and an append-only audit log. Every
// mutation is expressed as an audit event and applied through the same
// code path that replay uses, so replaying the log rebuilds the state.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anon/corpus.hpp"
#include "anon/error.hpp"
#include "anon/hash.hpp"
#include "anon/json_io.hpp"
#include "anon/redactor.hpp"

namespace anon {

enum class Status { pending, accepted, rejected };

constexpr std::string_view to_string(Status s) noexcept {
  switch (s) {
    case Status::pending: return "pending";
    case Status::accepted: return "accepted";
    case Status::rejected: return "rejected";
  }
  return "pending";
}

inline Status parse_status(std::string_view s) {
  if (s == "pending") return Status::pending;
  if (s == "accepted") return Status::accepted;
  if (s == "rejected") return Status::rejected;
  throw ValidationError("unknown status '" + std::string(s) + "'");
}

enum class Decision { accept, reject };

inline Decision parse_decision(std::string_view s) {
  if (s == "accept") return Decision::accept;
  if (s == "reject") return Decision::reject;
  throw ValidationError("decision must be 'accept' or 'reject'");
}

struct Suggestion {
  std::string id;
  EntitySpan entity;
  std::u32string replacement;
  Status status = Status::pending;
  std::optional<std::string> decided_by;
  std::optional<std::string> decided_at;

  friend bool operator==(const Suggestion&, const Suggestion&) = default;
};

struct AuditEvent {
  std::string type;
  nlohmann::json payload;

  friend bool operator==(const AuditEvent& a, const AuditEvent& b) {
    return a.type == b.type && a.payload == b.payload;
  }
};

struct Project {
  Document document;
  std::vector<Suggestion> suggestions;  // document order
  std::vector<std::pair<std::u32string, std::u32string>> replacement_map;  // surface -> replacement, insertion order
  std::vector<AuditEvent> audit;
  std::uint64_t version = 0;
  std::uint64_t next_suggestion = 1;

  const Suggestion* find(const std::string& id) const {
    for (const auto& s : suggestions)
      if (s.id == id) return &s;
    return nullptr;
  }
  const std::u32string* replacement_for(const std::u32string& surface) const {
    for (const auto& [s, r] : replacement_map)
      if (s == surface) return &r;
    return nullptr;
  }
};

/// Who made a change and when (ISO-8601 string supplied by the caller).
struct Actor {
  std::string id = "system";
  std::string at;
};

inline std::string now_iso8601() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// --- JSON ---------------------------------------------------------------------

inline nlohmann::json to_json(const Suggestion& s) {
  auto j = to_json(s.entity);
  j["id"] = s.id;
  j["replacement"] = u8(s.replacement);
  j["status"] = std::string(to_string(s.status));
  j["decided_by"] = s.decided_by ? nlohmann::json(*s.decided_by) : nlohmann::json(nullptr);
  j["decided_at"] = s.decided_at ? nlohmann::json(*s.decided_at) : nlohmann::json(nullptr);
  return j;
}

inline Suggestion suggestion_from_json(const nlohmann::json& j, const Document& doc) {
  Suggestion s;
  s.id = j.at("id").get<std::string>();
  s.entity = span_from_json(j, doc);
  s.replacement = unicode::decode_utf8(j.at("replacement").get<std::string>());
  s.status = parse_status(j.at("status").get<std::string>());
  if (!j.at("decided_by").is_null()) s.decided_by = j["decided_by"].get<std::string>();
  if (!j.at("decided_at").is_null()) s.decided_at = j["decided_at"].get<std::string>();
  return s;
}

/// Canonical JSON of the project state (without checksum).
inline nlohmann::json to_json(const Project& p) {
  nlohmann::json suggestions = nlohmann::json::array();
  for (const auto& s : p.suggestions) suggestions.push_back(to_json(s));
  nlohmann::json map = nlohmann::json::array();
  for (const auto& [s, r] : p.replacement_map) map.push_back({{"surface", u8(s)}, {"replacement", u8(r)}});
  nlohmann::json audit = nlohmann::json::array();
  for (const auto& e : p.audit) audit.push_back({{"type", e.type}, {"payload", e.payload}});
  return {{"version", p.version},         {"document", to_json(p.document)}, {"suggestions", std::move(suggestions)},
          {"replacement_map", std::move(map)}, {"audit", std::move(audit)},  {"next_suggestion", p.next_suggestion}};
}

inline bool operator==(const Project& a, const Project& b) { return to_json(a) == to_json(b); }

// --- event application ------------------------------------------------------------

namespace detail {

inline void sort_suggestions(std::vector<Suggestion>& v) {
  std::stable_sort(v.begin(), v.end(), [](const Suggestion& a, const Suggestion& b) {
    if (a.entity.span != b.entity.span) return a.entity.span < b.entity.span;
    return a.id < b.id;
  });
}

inline Suggestion& find_mut(Project& p, const std::string& id) {
  for (auto& s : p.suggestions)
    if (s.id == id) return s;
  throw NotFound("unknown suggestion '" + id + "'");
}

inline void set_replacement(Project& p, const std::u32string& surface, const std::u32string& replacement) {
  for (auto& [s, r] : p.replacement_map) {
    if (s == surface) {
      r = replacement;
      return;
    }
  }
  p.replacement_map.emplace_back(surface, replacement);
}

/// Next "A.________"-style placeholder not yet used by the project.
inline std::u32string next_placeholder(const Project& p) {
  for (std::size_t k = 0;; ++k) {
    auto candidate = letter_placeholder(k);
    bool used = false;
    for (const auto& [s, r] : p.replacement_map) used = used || r == candidate;
    if (!used) return candidate;
  }
}

inline void apply_event(Project& p, const AuditEvent& e) {
  const auto& pl = e.payload;
  if (e.type == "suggestions_added" || e.type == "manual_span") {
    for (const auto& sj : pl.at("suggestions")) {
      auto s = suggestion_from_json(sj, p.document);
      if (!p.replacement_for(s.entity.surface)) p.replacement_map.emplace_back(s.entity.surface, s.replacement);
      p.suggestions.push_back(std::move(s));
    }
    p.next_suggestion = pl.at("next_suggestion").get<std::uint64_t>();
    sort_suggestions(p.suggestions);
  } else if (e.type == "decision") {
    auto& s = find_mut(p, pl.at("suggestion_id").get<std::string>());
    s.status = parse_decision(pl.at("decision").get<std::string>()) == Decision::accept ? Status::accepted
                                                                                         : Status::rejected;
    s.decided_by = pl.at("actor").get<std::string>();
    s.decided_at = pl.at("at").get<std::string>();
  } else if (e.type == "replacement_edited") {
    const auto surface = unicode::decode_utf8(pl.at("surface").get<std::string>());
    const auto replacement = unicode::decode_utf8(pl.at("replacement").get<std::string>());
    set_replacement(p, surface, replacement);
    for (auto& s : p.suggestions)
      if (s.entity.surface == surface) s.replacement = replacement;
  } else {
    throw IntegrityError("unknown audit event '" + e.type + "'");
  }
  p.audit.push_back(e);
  ++p.version;
}

inline void check_version(const Project& p, std::optional<std::uint64_t> expected) {
  if (expected && *expected != p.version) throw VersionConflict(*expected, p.version);
}

inline std::string suggestion_id(const Project& p, std::uint64_t n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04llu", static_cast<unsigned long long>(n));
  return p.document.id + "-" + buf;
}

}  // namespace detail

// --- operations ---------------------------------------------------------------------

inline Project create_project(const Document& doc) {
  Project p;
  p.document = doc;
  p.audit.push_back({"created", {{"document", to_json(doc)}}});
  return p;
}

/// Adds detector output as pending suggestions; spans already present with
/// the same label are skipped. Returns the project unchanged (same version)
/// when nothing is new.
inline Project add_suggestions(Project p, const std::vector<EntitySpan>& spans,
                               std::optional<std::uint64_t> expected_version = std::nullopt) {
  detail::check_version(p, expected_version);
  nlohmann::json added = nlohmann::json::array();
  auto next = p.next_suggestion;
  std::vector<std::pair<std::u32string, std::u32string>> pending_map;
  for (const auto& span : spans) {
    if (span.span.end > p.document.text.size() || span_text(p.document, span.span) != span.surface)
      throw ValidationError("suggestion does not match the document text");
    const bool dup = std::any_of(p.suggestions.begin(), p.suggestions.end(), [&](const Suggestion& s) {
      return s.entity.span == span.span && s.entity.label == span.label;
    });
    bool dup_new = false;
    for (const auto& a : added)
      dup_new = dup_new || (a["start"] == span.span.start && a["end"] == span.span.end && a["label"] == span.label);
    if (dup || dup_new) continue;

    Suggestion s;
    s.id = detail::suggestion_id(p, next++);
    s.entity = span;
    if (auto r = p.replacement_for(span.surface)) {
      s.replacement = *r;
    } else {
      auto it = std::find_if(pending_map.begin(), pending_map.end(), [&](const auto& e) { return e.first == span.surface; });
      if (it != pending_map.end()) {
        s.replacement = it->second;
      } else {
        Project probe = p;
        for (const auto& e : pending_map) probe.replacement_map.push_back(e);
        s.replacement = detail::next_placeholder(probe);
        pending_map.emplace_back(span.surface, s.replacement);
      }
    }
    added.push_back(to_json(s));
  }
  if (added.empty()) return p;
  detail::apply_event(p, {"suggestions_added", {{"suggestions", std::move(added)}, {"next_suggestion", next}}});
  return p;
}

inline Project apply_decision(Project p, const std::string& suggestion_id, Decision decision, const Actor& actor = {},
                              std::optional<std::uint64_t> expected_version = std::nullopt) {
  detail::check_version(p, expected_version);
  const Suggestion* s = p.find(suggestion_id);
  if (!s) throw NotFound("unknown suggestion '" + suggestion_id + "'");
  const Status target = decision == Decision::accept ? Status::accepted : Status::rejected;
  if (s->status == target)
    throw ValidationError("suggestion '" + suggestion_id + "' is already " + std::string(to_string(target)));
  if (target == Status::accepted) {
    if (s->replacement.empty()) throw ValidationError("cannot accept a suggestion without replacement text");
    for (const auto& other : p.suggestions)
      if (other.id != s->id && other.status == Status::accepted && other.entity.span.overlaps(s->entity.span))
        throw OverlapConflict("suggestion '" + suggestion_id + "' overlaps accepted suggestion '" + other.id + "'");
  }
  detail::apply_event(p, {"decision",
                          {{"suggestion_id", suggestion_id},
                           {"decision", decision == Decision::accept ? "accept" : "reject"},
                           {"actor", actor.id},
                           {"at", actor.at}}});
  return p;
}

/// Marks a span by hand. The suggestion is created accepted with
/// source=manual; an empty replacement reuses or allocates the surface's
/// placeholder.
inline Project add_manual(Project p, CharSpan span, const std::string& label, std::u32string replacement,
                          const Actor& actor = {}, std::optional<std::uint64_t> expected_version = std::nullopt) {
  detail::check_version(p, expected_version);
  if (label.empty()) throw ValidationError("manual span needs a label");
  auto entity = make_span(p.document, span, label, Source::manual, 1.0);
  for (const auto& other : p.suggestions)
    if (other.status == Status::accepted && other.entity.span.overlaps(span))
      throw OverlapConflict("manual span overlaps accepted suggestion '" + other.id + "'");
  if (replacement.empty()) {
    if (auto r = p.replacement_for(entity.surface))
      replacement = *r;
    else
      replacement = detail::next_placeholder(p);
  } else if (auto r = p.replacement_for(entity.surface); r && *r != replacement) {
    throw ValidationError("surface already has replacement '" + u8(*r) + "'; edit it instead");
  }
  for (const auto& [s, r] : p.replacement_map)
    if (r == replacement && s != entity.surface)
      throw ValidationError("replacement '" + u8(replacement) + "' is already used for another surface");

  Suggestion s;
  s.id = detail::suggestion_id(p, p.next_suggestion);
  s.entity = std::move(entity);
  s.replacement = std::move(replacement);
  s.status = Status::accepted;
  s.decided_by = actor.id;
  s.decided_at = actor.at;
  detail::apply_event(
      p, {"manual_span", {{"suggestions", nlohmann::json::array({to_json(s)})}, {"next_suggestion", p.next_suggestion + 1}}});
  return p;
}

/// Changes the replacement of a suggestion's surface (all suggestions with
/// that surface follow).
inline Project edit_replacement(Project p, const std::string& suggestion_id, std::u32string replacement,
                                const Actor& actor = {}, std::optional<std::uint64_t> expected_version = std::nullopt) {
  detail::check_version(p, expected_version);
  const Suggestion* s = p.find(suggestion_id);
  if (!s) throw NotFound("unknown suggestion '" + suggestion_id + "'");
  if (replacement.empty()) throw ValidationError("replacement must be non-empty");
  for (const auto& [surface, r] : p.replacement_map)
    if (r == replacement && surface != s->entity.surface)
      throw ValidationError("replacement '" + u8(replacement) + "' is already used for another surface");
  detail::apply_event(p, {"replacement_edited",
                          {{"suggestion_id", suggestion_id},
                           {"surface", u8(s->entity.surface)},
                           {"replacement", u8(replacement)},
                           {"actor", actor.id},
                           {"at", actor.at}}});
  return p;
}

inline std::vector<EntitySpan> accepted_spans(const Project& p) {
  std::vector<EntitySpan> out;
  for (const auto& s : p.suggestions)
    if (s.status == Status::accepted) out.push_back(s.entity);
  sort_spans(out);
  return out;
}

/// Renders the accepted suggestions with the project's replacements.
inline AnonymizedDocument export_project(const Project& p, std::vector<std::string>* warnings = nullptr) {
  const auto accepted = accepted_spans(p);
  std::map<std::u32string, std::u32string> custom;
  for (const auto& [s, r] : p.replacement_map) custom[s] = r;
  const auto map = assign_placeholders(p.document, accepted, PlaceholderPolicy::custom, custom, warnings);
  return render(p.document, accepted, map);
}

/// Rebuilds a project from its audit log alone.
inline Project replay(const std::vector<AuditEvent>& audit) {
  if (audit.empty() || audit.front().type != "created") throw IntegrityError("audit log must start with 'created'");
  Project p = create_project(document_from_json(audit.front().payload.at("document")));
  p.audit.front() = audit.front();
  for (std::size_t i = 1; i < audit.size(); ++i) detail::apply_event(p, audit[i]);
  return p;
}

// --- persistence -----------------------------------------------------------------------

/// Canonical file bytes: sorted keys, two-space indent, LF, trailing
/// newline, with "checksum" = sha256 of the canonical bytes of the state.
inline std::string serialize_project(const Project& p) {
  auto j = to_json(p);
  j["checksum"] = sha256_hex(j.dump(2) + "\n");
  return j.dump(2) + "\n";
}

inline Project parse_project(std::string_view bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("project file is not valid JSON: ") + e.what());
  }
  try {
    if (!j.is_object() || !j.contains("checksum")) throw IntegrityError("project file has no checksum");
    const auto checksum = j["checksum"].get<std::string>();
    j.erase("checksum");
    if (sha256_hex(j.dump(2) + "\n") != checksum) throw IntegrityError("project checksum mismatch");

    std::vector<AuditEvent> audit;
    for (const auto& e : j.at("audit")) audit.push_back({e.at("type").get<std::string>(), e.at("payload")});
    Project p = replay(audit);
    if (to_json(p) != j) throw IntegrityError("project state disagrees with its audit log");
    return p;
  } catch (const IntegrityError&) {
    throw;
  } catch (const std::exception& e) {
    throw IntegrityError(std::string("corrupt project file: ") + e.what());
  }
}

inline void save(const Project& p, const std::filesystem::path& path) {
  const auto tmp = path.string() + ".tmp";
  write_text_file(tmp, serialize_project(p));
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp + " to " + path.string() + ": " + ec.message());
}

inline Project load(const std::filesystem::path& path) { return parse_project(read_text_file(path.string())); }

/// Directory of project files, one per document id. Mutations of one
/// project are serialized; distinct projects proceed independently.
class ProjectStore {
public:
  explicit ProjectStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create project directory " + dir_.string() + ": " + ec.message());
  }

  const std::filesystem::path& directory() const noexcept { return dir_; }

  std::filesystem::path path_for(const std::string& id) const {
    if (id.empty() || !std::all_of(id.begin(), id.end(), [](char c) {
          return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
        }))
      throw NotFound("invalid project id '" + id + "'");
    return dir_ / (id + ".json");
  }

  bool exists(const std::string& id) const { return std::filesystem::exists(path_for(id)); }

  /// Creates the project for `doc` unless one already exists; returns it.
  Project create(const Document& doc) {
    std::lock_guard lock(mutex_for(doc.id));
    const auto path = path_for(doc.id);
    if (std::filesystem::exists(path)) return anon::load(path);
    auto p = create_project(doc);
    save(p, path);
    return p;
  }

  Project get(const std::string& id) const {
    const auto path = path_for(id);
    if (!std::filesystem::exists(path)) throw NotFound("unknown document '" + id + "'");
    return anon::load(path);
  }

  /// Loads, applies `fn`, saves; all under the project's lock.
  template <typename Fn>
  Project update(const std::string& id, Fn&& fn) {
    std::lock_guard lock(mutex_for(id));
    Project p = get(id);
    const auto before = p.version;
    Project next = fn(std::move(p));
    if (next.version != before) save(next, path_for(id));
    return next;
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(dir_))
      if (e.path().extension() == ".json") out.push_back(e.path().stem().string());
    std::sort(out.begin(), out.end());
    return out;
  }

private:
  std::mutex& mutex_for(const std::string& id) {
    std::lock_guard lock(map_mutex_);
    auto& m = mutexes_[id];
    if (!m) m = std::make_unique<std::mutex>();
    return *m;
  }

  std::filesystem::path dir_;
  std::mutex map_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> mutexes_;
};

}  // namespace anon
