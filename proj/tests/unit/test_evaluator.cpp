#include <random>

#include "catch_amalgamated.hpp"

#include "anon/anon.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

using namespace anon;

namespace {

std::vector<TokenSpan> random_spans(std::mt19937_64& rng, std::size_t max) {
  static const std::vector<std::string> labels{"PER", "LOC", "ORG"};
  std::vector<TokenSpan> out(rng() % (max + 1));
  for (auto& s : out) {
    s.start = rng() % 8;
    s.end = s.start + 1 + rng() % 2;
    s.label = labels[rng() % labels.size()];
  }
  return out;
}

EvalReport fixed(double p, double r, double f) {
  EvalReport e;
  e.micro.metrics = {p, r, f};
  return e;
}

}  // namespace

TEST_CASE("score examples") {
  const std::vector<TokenSpan> gold{{0, 2, "PER"}, {5, 6, "LOC"}};
  const auto r = score(gold, {{0, 2, "PER"}, {8, 9, "LOC"}});
  CHECK(r.micro.counts == Counts{1, 1, 1});
  CHECK(r.micro.metrics == Metrics{50.0, 50.0, 50.0});
  CHECK(score(gold, gold).micro.metrics == Metrics{100.0, 100.0, 100.0});
  CHECK(score(gold, {}).micro.metrics == Metrics{0.0, 0.0, 0.0});
  CHECK(score({}, {}).micro.metrics == Metrics{0.0, 0.0, 0.0});
}

TEST_CASE("percentages round half away from zero at two decimals") {
  CHECK(detail::percent2(1, 3) == 33.33);
  CHECK(detail::percent2(2, 3) == 66.67);
  CHECK(detail::percent2(1, 8) == 12.5);
  CHECK(detail::percent2(1, 1600) == 0.06);
  CHECK(detail::percent2(0, 0) == 0.0);
}

TEST_CASE("a label mismatch counts as one false positive and one false negative") {
  const auto r = score({{0, 2, "PER"}}, {{0, 2, "ORG"}});
  CHECK(r.per_label.at("PER").counts == Counts{0, 0, 1});
  CHECK(r.per_label.at("ORG").counts == Counts{0, 1, 0});
}

TEST_CASE("macro averages labels without weighting") {
  const auto r = score({{0, 1, "PER"}, {2, 3, "PER"}, {4, 5, "LOC"}}, {{0, 1, "PER"}, {2, 3, "PER"}}, true);
  REQUIRE(r.macro);
  CHECK(r.macro->recall == 50.0);
  CHECK(r.micro.metrics.recall == 66.67);
}

TEST_CASE("score agrees with the set oracle on random cases") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 500; ++i) {
    const auto g = random_spans(rng, 10), p = random_spans(rng, 10);
    oracle::Prf micro;
    const auto per = oracle::brute_force_score(g, p, &micro);
    const auto r = score(g, p);
    CHECK(r.micro.counts == Counts{micro.tp, micro.fp, micro.fn});
    CHECK(r.micro.metrics == Metrics{micro.p, micro.r, micro.f});
    for (const auto& [label, x] : per) CHECK(r.per_label.at(label).metrics == Metrics{x.p, x.r, x.f});
  }
}

TEST_CASE("reported table rows have F1 within rounding of the harmonic mean of P and R") {
  auto f1 = [](double p, double r) { return 2 * p * r / (p + r); };
  CHECK(f1(92.26, 92.57) == Catch::Approx(92.42).margin(0.01));
  CHECK(f1(83.13, 94.85) == Catch::Approx(88.60).margin(0.01));
  CHECK(f1(90.72, 83.76) == Catch::Approx(87.10).margin(0.01));
  CHECK(f1(85.85, 94.95) == Catch::Approx(90.17).margin(0.01));
}

TEST_CASE("evaluate_conditions with a perfect detector") {
  const auto corpus = synth::make_corpus(5, 4);
  const auto r = evaluate_conditions(corpus, [](const Document& d) {
    DetectionResult out;
    out.spans = d.gold;
    return out;
  });
  CHECK(r.normal.micro.metrics == Metrics{100, 100, 100});
  CHECK(r.uniformized.micro.metrics == Metrics{100, 100, 100});
  CHECK(r.delta == Metrics{0, 0, 0});
}

TEST_CASE("evaluate_conditions when each surface is found once of three times") {
  const auto corpus = synth::make_corpus(10, 6);
  const auto r = evaluate_conditions(corpus, [](const Document& d) {
    DetectionResult out;
    std::set<std::u32string> seen;
    for (const auto& g : d.gold)
      if (seen.insert(g.surface).second) out.spans.push_back(g);
    return out;
  });
  CHECK(r.normal.micro.metrics.recall == Catch::Approx(33.33).margin(0.01));
  CHECK(r.uniformized.micro.metrics.recall == 100.0);
  CHECK(r.uniformized.micro.metrics.precision == 100.0);
  CHECK(r.normal.documents == 10);
}

TEST_CASE("score_document maps characters onto tokens") {
  auto d = ingest_text("Hans Meier klagt in Zug.", Language::de);
  const std::vector<EntitySpan> gold{make_span(d, {0, 10}, "PER"), make_span(d, {20, 23}, "LOC")};
  const std::vector<EntitySpan> pred{make_span(d, {0, 9}, "PER")};
  const auto c = score_document(d, gold, pred).micro();
  CHECK(c == Counts{1, 0, 1});
}

TEST_CASE("table has the Normal and Uniformizing column groups") {
  const auto t = format_table({{"Legal-Swiss-RoBERTa-base", fixed(92.26, 92.57, 92.42), fixed(83.13, 94.85, 88.60)}});
  CHECK(t.find("Normal") != std::string::npos);
  CHECK(t.find("Uniformizing") != std::string::npos);
  CHECK(t.find("Precision    Recall    F1-Score") != std::string::npos);
  CHECK(t.find("Legal-Swiss-RoBERTa-base |      92.26     92.57       92.42 |      83.13     94.85       88.60") !=
        std::string::npos);
}
