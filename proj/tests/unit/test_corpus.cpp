#include <fstream>
#include <random>

#include "catch_amalgamated.hpp"

#include "anon/anon.hpp"
#include "support/synth.hpp"

using namespace anon;

namespace {

std::vector<std::u32string> sentence_texts(const Document& d) {
  std::vector<std::u32string> out;
  for (const auto& s : d.sentences) out.push_back(span_text(d, s));
  return out;
}

}  // namespace

TEST_CASE("ingest_text splits two plain sentences") {
  const auto d = ingest_text("Das Gericht tagt. Es urteilt.", Language::de);
  REQUIRE(d.sentences.size() == 2);
  CHECK(d.sentences[0] == CharSpan{0, 17});
  CHECK(d.sentences[1] == CharSpan{18, 29});
  CHECK(d.language == Language::de);
  CHECK(d.id.size() == 16);
}

TEST_CASE("ingest_text rejects empty and blank input") {
  CHECK_THROWS_AS(ingest_text("", Language::de), EmptyDocument);
  CHECK_THROWS_AS(ingest_text(" \n\t ", Language::fr), EmptyDocument);
}

TEST_CASE("abbreviation, ordinal and party initial do not split") {
  const auto d = ingest_text("Urteil vom 1. Jan. 2020. Die Partei A. erscheint.", Language::de);
  const auto s = sentence_texts(d);
  REQUIRE(s.size() == 2);
  CHECK(s[0] == U"Urteil vom 1. Jan. 2020.");
  CHECK(s[1] == U"Die Partei A. erscheint.");
}

TEST_CASE("segment_sentences on a single character") {
  CHECK(segment_sentences(U"a", Language::de) == std::vector<CharSpan>{{0, 1}});
  CHECK(segment_sentences(U"", Language::de).empty());
}

TEST_CASE("rubrum line breaks split after party and colon") {
  const std::u32string text = U"X gegen Y.\nSachverhalt:\nAm 3.3.2020 erging der Entscheid.";
  const auto spans = segment_sentences(text, Language::de);
  REQUIRE(spans.size() == 3);
  CHECK(span_text(text, spans[0]) == U"X gegen Y.");
  CHECK(span_text(text, spans[1]) == U"Sachverhalt:");
  CHECK(span_text(text, spans[2]) == U"Am 3.3.2020 erging der Entscheid.");
}

TEST_CASE("party initial on the same line stays inside the sentence") {
  const auto spans = segment_sentences(U"Gegen B.________ Beschwerde erhoben. Ende.", Language::de);
  CHECK(spans.size() == 2);
}

TEST_CASE("N plain sentences give N spans") {
  for (std::size_t n = 1; n <= 12; ++n) {
    std::u32string text;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) text += U" ";
      text += U"Satz nummer eins";
      text += U".";
    }
    CHECK(segment_sentences(text, Language::de).size() == n);
  }
}

TEST_CASE("lowercase continuation does not split") {
  CHECK(segment_sentences(U"Er sagte: nein. Dann ging er.", Language::de).size() == 2);
  CHECK(segment_sentences(U"vgl. Art. 5 Abs. 2 BV. Das gilt.", Language::de).size() == 2);
}

TEST_CASE("closing quotes stay with the sentence") {
  const std::u32string text = U"Er rief «Halt!» Danach schwieg er.";
  const auto spans = segment_sentences(text, Language::de);
  REQUIRE(spans.size() == 2);
  CHECK(span_text(text, spans[0]) == U"Er rief «Halt!»");
}

TEST_CASE("french and italian abbreviations") {
  CHECK(segment_sentences(U"Selon l'art. 8 CEDH. La cour admet.", Language::fr).size() == 2);
  CHECK(segment_sentences(U"Secondo cfr. Sentenza. Il ricorso.", Language::it).size() == 2);
}

TEST_CASE("sentence spans are sorted, disjoint and in bounds") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    const auto text = synth::random_text(rng, 1 + i % 60);
    const auto spans = segment_sentences(text, Language::de);
    std::size_t prev = 0;
    for (const auto& s : spans) {
      REQUIRE(s.start < s.end);
      REQUIRE(s.end <= text.size());
      REQUIRE(s.start >= prev);
      prev = s.end;
    }
  }
}

TEST_CASE("span_text examples") {
  CHECK(span_text(std::u32string_view(U"abcdef"), CharSpan{1, 3}) == U"bc");
  CHECK(span_text(std::u32string_view(U"abc"), CharSpan{0, 3}) == U"abc");
  CHECK_THROWS_AS(span_text(std::u32string_view(U"abc"), CharSpan{2, 5}), SpanOutOfBounds);
}

TEST_CASE("offsets count Unicode scalar values") {
  const auto d = ingest_text("Zürich ist schön. Ça va.", Language::de);
  CHECK(d.text.size() == 24);
  CHECK(span_text(d, {0, 6}) == U"Zürich");
  REQUIRE(d.sentences.size() == 2);
  CHECK(d.sentences[1].start == 18);
}

TEST_CASE("line endings are normalized before ids are computed") {
  const auto a = ingest_text("Eins.\r\nZwei.", Language::de);
  const auto b = ingest_text("Eins.\nZwei.", Language::de);
  CHECK(a.text == b.text);
  CHECK(a.id == b.id);
  CHECK(ingest_text("Eins.", Language::de).id != ingest_text("Eins.", Language::fr).id);
}

TEST_CASE("invalid UTF-8 is rejected") {
  CHECK_THROWS_AS(ingest_text("abc\xff", Language::de), InvalidUtf8);
  CHECK_THROWS_AS(ingest_text("\xc3", Language::de), InvalidUtf8);
  CHECK_THROWS_AS(ingest_text("\xed\xa0\x80", Language::de), InvalidUtf8);
}

TEST_CASE("gold spans are checked and cross-sentence spans flagged") {
  auto d = ingest_text("Hans Meier klagt. Er verliert.", Language::de);
  attach_gold(d, {make_span(d, {0, 10}, "PER"), make_span(d, {11, 21}, "MISC")});
  REQUIRE(d.gold.size() == 2);
  CHECK_FALSE(d.gold[0].cross_sentence);
  CHECK(d.gold[1].cross_sentence);

  EntitySpan wrong = make_span(d, {0, 4}, "PER");
  wrong.surface = U"Fritz";
  CHECK_THROWS_AS(attach_gold(d, {wrong}), ValidationError);
  LabelSet labels;
  CHECK_THROWS_AS(attach_gold(d, {make_span(d, {0, 4}, "XYZ")}, &labels), UnknownLabel);
}

TEST_CASE("shipped abbreviation files match the built-in tables") {
  for (auto lang : kLanguages) {
    const auto path = std::string(ANON_DATA_DIR) + "/abbreviations/" + std::string(to_string(lang)) + ".txt";
    const auto loaded = AbbreviationTable::load(path);
    CHECK(loaded.entries() == AbbreviationTable::defaults(lang).entries());
  }
  CHECK_THROWS_AS(AbbreviationTable::load("/nonexistent/abbrev.txt"), IoError);
}

TEST_CASE("custom abbreviation table changes splitting") {
  AbbreviationTable t({"Xyz."});
  CHECK(segment_sentences(U"Siehe Xyz. Der Rest.", t).size() == 1);
  CHECK(segment_sentences(U"Siehe Xyz. Der Rest.", Language::de).size() == 2);
}
