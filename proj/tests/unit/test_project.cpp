#include <atomic>
#include <random>
#include <thread>

#include "catch_amalgamated.hpp"

#include "anon/anon.hpp"
#include "support/tempdir.hpp"

using namespace anon;
using testing_support::TempDir;

namespace {

const char* kText = "Hans Meier gegen Anna Huber. Hans Meier zahlt in Zug.";

Project seeded() {
  const auto d = ingest_text(kText, Language::de);
  return add_suggestions(create_project(d), {make_span(d, {0, 10}, "PER", Source::conventional, 0.8),
                                             make_span(d, {17, 27}, "PER", Source::conventional, 0.8),
                                             make_span(d, {29, 39}, "PER", Source::uniformized, 0.8),
                                             make_span(d, {49, 52}, "LOC", Source::gazetteer)});
}

const Actor kAlice{"alice", "2024-01-01T00:00:00Z"};

}  // namespace

TEST_CASE("new suggestions are pending with consistent replacements") {
  const auto p = seeded();
  CHECK(p.version == 1);
  REQUIRE(p.suggestions.size() == 4);
  CHECK(p.suggestions[0].id == p.document.id + "-0001");
  CHECK(p.suggestions[0].status == Status::pending);
  CHECK(p.suggestions[0].replacement == U"A.________");
  CHECK(p.suggestions[1].replacement == U"B.________");
  CHECK(p.suggestions[2].replacement == U"A.________");
  CHECK(p.suggestions[3].replacement == U"C.________");
  CHECK(add_suggestions(p, {p.suggestions[0].entity}).version == p.version);
}

TEST_CASE("accept then save then load keeps statuses") {
  TempDir dir;
  auto p = seeded();
  p = apply_decision(p, p.suggestions[0].id, Decision::accept, kAlice);
  p = apply_decision(p, p.suggestions[1].id, Decision::reject, kAlice);
  save(p, dir.file("p.json"));
  const auto q = load(dir.file("p.json"));
  CHECK(q == p);
  CHECK(q.suggestions[0].status == Status::accepted);
  CHECK(q.suggestions[0].decided_by == std::optional<std::string>("alice"));
  CHECK(q.suggestions[1].status == Status::rejected);
  CHECK(q.suggestions[2].status == Status::pending);
  CHECK(serialize_project(q) == read_text_file(dir.file("p.json")));
}

TEST_CASE("unknown suggestion id") {
  const auto p = seeded();
  CHECK_THROWS_AS(apply_decision(p, "nope-0001", Decision::accept), NotFound);
  CHECK_THROWS_AS(edit_replacement(p, "nope-0001", U"X"), NotFound);
}

TEST_CASE("manual span overlapping an accepted suggestion") {
  auto p = seeded();
  p = apply_decision(p, p.suggestions[0].id, Decision::accept);
  CHECK_THROWS_AS(add_manual(p, {5, 12}, "PER", U""), OverlapConflict);
  CHECK_THROWS_AS(add_manual(p, {0, 4}, "PER", U""), OverlapConflict);
  CHECK_NOTHROW(add_manual(p, {10, 16}, "MISC", U""));
  CHECK_NOTHROW(add_manual(p, {17, 21}, "PER", U""));  // overlaps only a pending suggestion
  CHECK_THROWS_AS(add_manual(p, {50, 60}, "PER", U""), SpanOutOfBounds);
}

TEST_CASE("manual spans are accepted immediately and reuse replacements") {
  auto p = seeded();
  p = add_manual(p, {29, 39}, "PER", U"", kAlice);
  REQUIRE(p.suggestions.size() == 5);
  const auto& s = p.suggestions[3];
  CHECK(s.entity.span == CharSpan{29, 39});
  CHECK(s.entity.source == Source::manual);
  CHECK(s.status == Status::accepted);
  CHECK(s.replacement == U"A.________");
  CHECK_THROWS_AS(add_manual(p, {0, 10}, "PER", U"Z.________"), ValidationError);
  p = add_manual(p, {44, 48}, "MISC", U"[Ort]");
  CHECK(p.replacement_for(U"in Z") == nullptr);
  CHECK(*p.replacement_for(span_text(p.document, {44, 48})) == U"[Ort]");
}

TEST_CASE("accepting overlapping suggestions conflicts") {
  const auto d = ingest_text(kText, Language::de);
  auto p = add_suggestions(create_project(d), {make_span(d, {0, 10}, "PER"), make_span(d, {5, 10}, "PER")});
  p = apply_decision(p, p.suggestions[0].id, Decision::accept);
  CHECK_THROWS_AS(apply_decision(p, p.suggestions[1].id, Decision::accept), OverlapConflict);
  p = apply_decision(p, p.suggestions[0].id, Decision::reject);
  CHECK_NOTHROW(apply_decision(p, p.suggestions[1].id, Decision::accept));
}

TEST_CASE("re-decision is allowed and audited") {
  auto p = seeded();
  const auto id = p.suggestions[0].id;
  p = apply_decision(p, id, Decision::accept);
  p = apply_decision(p, id, Decision::reject);
  p = apply_decision(p, id, Decision::accept);
  CHECK(p.version == 4);
  CHECK(p.audit.size() == 5);
  CHECK_THROWS_AS(apply_decision(p, id, Decision::accept), ValidationError);
}

TEST_CASE("stale version is rejected") {
  auto p = seeded();
  const auto v = p.version;
  p = apply_decision(p, p.suggestions[0].id, Decision::accept, {}, v);
  try {
    apply_decision(p, p.suggestions[1].id, Decision::accept, {}, v);
    FAIL("expected VersionConflict");
  } catch (const VersionConflict& e) {
    CHECK(e.expected() == v);
    CHECK(e.actual() == v + 1);
  }
  CHECK_THROWS_AS(add_manual(p, {44, 48}, "MISC", U"", {}, v), VersionConflict);
}

TEST_CASE("editing a replacement updates every suggestion of the surface") {
  auto p = seeded();
  p = edit_replacement(p, p.suggestions[0].id, U"[Kläger]");
  CHECK(p.suggestions[0].replacement == U"[Kläger]");
  CHECK(p.suggestions[2].replacement == U"[Kläger]");
  CHECK_THROWS_AS(edit_replacement(p, p.suggestions[1].id, U"[Kläger]"), ValidationError);
  CHECK_THROWS_AS(edit_replacement(p, p.suggestions[1].id, U""), ValidationError);
}

TEST_CASE("export renders only accepted suggestions") {
  auto p = seeded();
  for (const auto& s : std::vector<Suggestion>(p.suggestions))
    if (s.entity.surface == U"Hans Meier") p = apply_decision(p, s.id, Decision::accept);
  const auto out = export_project(p);
  CHECK(out.text == U"A.________ gegen Anna Huber. A.________ zahlt in Zug.");
}

TEST_CASE("replay rebuilds the project from the audit log") {
  auto p = seeded();
  p = apply_decision(p, p.suggestions[0].id, Decision::accept, kAlice);
  p = edit_replacement(p, p.suggestions[1].id, U"X");
  p = add_manual(p, {44, 48}, "MISC", U"");
  CHECK(replay(p.audit) == p);
  CHECK_THROWS_AS(replay({}), IntegrityError);
}

TEST_CASE("corrupt project files are rejected") {
  TempDir dir;
  auto p = seeded();
  const auto good = serialize_project(p);
  CHECK_THROWS_AS(parse_project("{"), IntegrityError);
  CHECK_THROWS_AS(parse_project("{}"), IntegrityError);
  auto tampered = good;
  tampered.replace(tampered.find("pending"), 7, "accepted");
  CHECK_THROWS_AS(parse_project(tampered), IntegrityError);

  // valid checksum over a state that disagrees with its audit log
  auto j = nlohmann::json::parse(good);
  j.erase("checksum");
  j["suggestions"][0]["status"] = "accepted";
  j["checksum"] = sha256_hex(j.dump(2) + "\n");
  CHECK_THROWS_AS(parse_project(j.dump(2) + "\n"), IntegrityError);
  CHECK_THROWS_AS(load(dir.file("missing.json")), IoError);
}

TEST_CASE("serialized form is canonical") {
  const auto text = serialize_project(seeded());
  CHECK(text.back() == '\n');
  CHECK(text.find('\r') == std::string::npos);
  const auto j = nlohmann::json::parse(text);
  for (const char* k : {"version", "document", "suggestions", "replacement_map", "audit", "checksum"}) CHECK(j.contains(k));
  CHECK(j.dump(2) + "\n" == text);
}

TEST_CASE("store serializes updates per project and isolates projects") {
  TempDir dir;
  ProjectStore store(dir.path());
  const auto a = ingest_text("Hans Meier klagt. Meier zahlt.", Language::de);
  const auto b = ingest_text("Anna Huber klagt. Huber zahlt.", Language::de);
  store.create(a);
  store.create(b);
  CHECK(store.create(a).version == 0);
  CHECK(store.ids().size() == 2);
  CHECK_THROWS_AS(store.get("0000000000000000"), NotFound);
  CHECK_THROWS_AS(store.get("../etc"), NotFound);

  std::vector<std::thread> threads;
  std::atomic<int> conflicts{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      const auto& doc = t % 2 ? a : b;
      for (int k = 0; k < 5; ++k) {
        try {
          store.update(doc.id, [&](Project p) {
            return add_manual(std::move(p), {18, 23}, "PER", U"", {}, std::nullopt);
          });
        } catch (const OverlapConflict&) {
          ++conflicts;
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  const auto pa = store.get(a.id), pb = store.get(b.id);
  CHECK(pa.suggestions.size() == 1);
  CHECK(pb.suggestions.size() == 1);
  CHECK(conflicts == 38);
  CHECK(replay(pa.audit) == pa);
}
