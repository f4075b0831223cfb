#include <random>

#include "catch_amalgamated.hpp"

#include "anon/anon.hpp"
#include "support/oracles.hpp"

using namespace anon;

namespace {

std::vector<std::pair<std::u32string, CharSpan>> flat(const std::vector<Token>& tokens) {
  std::vector<std::pair<std::u32string, CharSpan>> out;
  for (const auto& t : tokens) out.emplace_back(t.text, t.span);
  return out;
}

}  // namespace

TEST_CASE("tokenize splits words and punctuation") {
  using V = std::vector<std::pair<std::u32string, CharSpan>>;
  CHECK(flat(tokenize(U"Hans Meier,")) == V{{U"Hans", {0, 4}}, {U"Meier", {5, 10}}, {U",", {10, 11}}});
  CHECK(flat(tokenize(U"A.________ klagt")) == V{{U"A.________", {0, 10}}, {U"klagt", {11, 16}}});
  CHECK(tokenize(U"").empty());
}

TEST_CASE("tokenize party pattern needs a word start and two underscores") {
  using V = std::vector<std::u32string>;
  auto texts = [](std::u32string_view s) {
    V out;
    for (const auto& t : tokenize(s)) out.push_back(t.text);
    return out;
  };
  CHECK(texts(U"A. klagt") == V{U"A.", U"klagt"});
  CHECK(texts(U"A._ x") == V{U"A.", U"_", U"x"});
  CHECK(texts(U"BA.__") == V{U"BA", U".", U"_", U"_"});
  CHECK(texts(U"Straße 12a") == V{U"Straße", U"12a"});
}

TEST_CASE("tokenize over a range keeps document offsets") {
  const std::u32string text = U"Eins. Zwei drei.";
  const auto toks = tokenize(text, CharSpan{6, 16});
  REQUIRE(toks.size() == 3);
  CHECK(toks[0].span == CharSpan{6, 10});
  CHECK(toks[2].span == CharSpan{15, 16});
}

TEST_CASE("to_iob2 examples") {
  const std::u32string text = U"Hans Meier klagt";
  Document d;
  d.text = text;
  const auto toks = tokenize(text);
  CHECK(to_iob2(toks, std::vector{make_span(d, {0, 10}, "PER")}) == std::vector<std::string>{"B-PER", "I-PER", "O"});
  CHECK(to_iob2(toks, std::vector<EntitySpan>{}) == std::vector<std::string>{"O", "O", "O"});

  d.text = U"in Zug AG";
  const auto t2 = tokenize(d.text);
  CHECK(to_iob2(t2, std::vector{make_span(d, {3, 6}, "LOC"), make_span(d, {7, 9}, "ORG")}) ==
        std::vector<std::string>{"O", "B-LOC", "B-ORG"});
}

TEST_CASE("to_iob2 snaps outward and rejects overlaps") {
  Document d;
  d.text = U"Hans Meier klagt";
  const auto toks = tokenize(d.text);
  Iob2Stats st;
  CHECK(to_iob2(toks, std::vector{make_span(d, {1, 7}, "PER")}, &st) ==
        std::vector<std::string>{"B-PER", "I-PER", "O"});
  CHECK(st.snapped == 1);
  CHECK_THROWS_AS(to_iob2(toks, std::vector{make_span(d, {0, 4}, "PER"), make_span(d, {2, 8}, "PER")}), OverlapError);
  CHECK_THROWS_AS(to_iob2(toks, std::vector{make_span(d, {0, 2}, "PER"), make_span(d, {2, 4}, "LOC")}), OverlapError);
}

TEST_CASE("extract_spans examples") {
  using T = std::vector<TokenSpan>;
  CHECK(extract_spans(std::vector<std::string>{"B-PER", "I-PER", "O", "B-LOC"}) == T{{0, 2, "PER"}, {3, 4, "LOC"}});
  CHECK(extract_spans(std::vector<std::string>{"O", "O"}).empty());
  DecodeStats st;
  CHECK(extract_spans(std::vector<std::string>{"I-PER", "O"}, &st) == T{{0, 1, "PER"}});
  CHECK(st.repairs == 1);
}

TEST_CASE("extract_spans label changes and bad tags") {
  using T = std::vector<TokenSpan>;
  DecodeStats st;
  CHECK(extract_spans(std::vector<std::string>{"B-PER", "I-LOC", "I-LOC", "B-LOC"}, &st) ==
        T{{0, 1, "PER"}, {1, 3, "LOC"}, {3, 4, "LOC"}});
  CHECK(st.repairs == 1);
  CHECK_THROWS_AS(extract_spans(std::vector<std::string>{"X-PER"}), UnknownLabel);
  LabelSet labels;
  CHECK_THROWS_AS(extract_spans(std::vector<std::string>{"B-FOO"}, nullptr, &labels), UnknownLabel);
}

TEST_CASE("extract_spans agrees with the reference decoder on random tag strings") {
  std::mt19937_64 rng(11);
  const std::vector<std::string> alphabet{"O", "B-PER", "I-PER", "B-LOC", "I-LOC", "I-ORG"};
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1), len(0, 30);
  for (int i = 0; i < 2000; ++i) {
    std::vector<std::string> tags(len(rng));
    for (auto& t : tags) t = alphabet[pick(rng)];
    DecodeStats st;
    std::size_t ref_repairs = 0;
    const auto got = extract_spans(tags, &st);
    const auto ref = oracle::decode(tags, &ref_repairs);
    REQUIRE(got.size() == ref.size());
    for (std::size_t k = 0; k < got.size(); ++k) {
      CHECK(got[k].start == std::get<0>(ref[k]));
      CHECK(got[k].end == std::get<1>(ref[k]));
      CHECK(got[k].label == std::get<2>(ref[k]));
    }
    CHECK(st.repairs == ref_repairs);
  }
}

TEST_CASE("encode then decode is the identity on valid span sets") {
  std::mt19937_64 rng(5);
  const std::vector<std::string> labels{"PER", "LOC", "ORG", "MISC"};
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = rng() % 40;
    std::vector<TokenSpan> spans;
    std::size_t pos = 0;
    while (pos < n) {
      pos += rng() % 4;
      if (pos >= n) break;
      const std::size_t len = 1 + rng() % 3;
      const std::size_t end = std::min(n, pos + len);
      spans.push_back({pos, end, labels[rng() % labels.size()]});
      pos = end;
    }
    CHECK(extract_spans(encode_iob2(n, spans)) == spans);
  }
}
