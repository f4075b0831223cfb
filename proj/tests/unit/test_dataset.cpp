#include <random>
#include <set>

#include "catch_amalgamated.hpp"

#include "anon/anon.hpp"
#include "support/synth.hpp"

using namespace anon;

namespace {

PrepConfig windows(std::size_t w, double ratio) {
  PrepConfig c;
  c.max_seq_len = w;
  c.truncation_stride_ratio = ratio;
  return c;
}

TrainingExample example(bool positive, std::size_t tag) {
  TrainingExample e;
  e.doc_id = "d";
  e.sentence_index = tag;
  e.tokens = {"x"};
  e.labels = {positive ? "B-PER" : "O"};
  return e;
}

std::vector<TrainingExample> mix(std::size_t pos, std::size_t neg) {
  std::vector<TrainingExample> out;
  for (std::size_t i = 0; i < pos + neg; ++i) out.push_back(example(i < pos, i));
  return out;
}

std::size_t count_positive(const std::vector<TrainingExample>& v) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](const auto& e) { return e.positive(); }));
}

}  // namespace

TEST_CASE("prep defaults equal the reported training setup") {
  const PrepConfig c;
  CHECK(c.max_seq_len == 192);
  CHECK(c.truncation_stride_ratio == 0.5);
  CHECK(c.neg_to_pos_ratio == 1.5);
  CHECK(c.split_fractions == std::array<double, 3>{0.8, 0.1, 0.1});
}

TEST_CASE("chunk_windows examples") {
  using W = std::vector<TokenWindow>;
  CHECK(chunk_windows(10, windows(4, 0.5)) == W{{0, 4}, {2, 6}, {4, 8}, {6, 10}});
  CHECK(chunk_windows(3, windows(192, 0.5)) == W{{0, 3}});
  CHECK(chunk_windows(300, windows(192, 0.5)) == W{{0, 192}, {96, 288}, {108, 300}});
  CHECK(chunk_windows(0, windows(192, 0.5)).empty());
  CHECK(chunk_windows(192, windows(192, 0.5)) == W{{0, 192}});
  CHECK(chunk_windows(193, windows(192, 0.5)) == W{{0, 192}, {1, 193}});
}

TEST_CASE("chunk_windows rejects a zero step and bad ratios") {
  CHECK_THROWS_AS(chunk_windows(10, windows(2, 0.75)), InvalidConfig);
  CHECK_THROWS_AS(chunk_windows(10, windows(8, 0.0)), InvalidConfig);
  CHECK_THROWS_AS(chunk_windows(10, windows(8, 1.0)), InvalidConfig);
}

TEST_CASE("reconstruct_labels prefers the window whose centre is nearest") {
  const auto ws = chunk_windows(10, windows(4, 0.5));
  std::vector<std::vector<std::string>> labels;
  for (std::size_t w = 0; w < ws.size(); ++w) labels.push_back(std::vector<std::string>(4, "B-W" + std::to_string(w)));
  const auto out = reconstruct_labels(10, ws, labels);
  // centres at 2, 4, 6, 8; token t sits at t + 0.5
  CHECK(out == std::vector<std::string>{"B-W0", "B-W0", "B-W0", "B-W1", "B-W1", "B-W2", "B-W2", "B-W3", "B-W3",
                                        "B-W3"});
  CHECK_THROWS_AS(reconstruct_labels(10, ws, {}), ValidationError);
}

TEST_CASE("reconstruct over windows of a full labelling is the identity") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = rng() % 500;
    std::vector<std::string> full(n);
    for (auto& l : full) l = rng() % 3 ? "O" : "B-PER";
    const auto ws = chunk_windows(n, windows(64, 0.25));
    std::vector<std::vector<std::string>> per;
    for (const auto& w : ws) per.emplace_back(full.begin() + static_cast<long>(w.begin), full.begin() + static_cast<long>(w.end));
    CHECK(reconstruct_labels(n, ws, per) == full);
  }
}

TEST_CASE("sample_negatives examples") {
  PrepConfig c;
  auto a = sample_negatives(mix(10, 20), c);
  CHECK(count_positive(a) == 10);
  CHECK(a.size() == 25);
  CHECK(sample_negatives(mix(10, 5), c).size() == 15);
  CHECK(sample_negatives(mix(0, 20), c).empty());
}

TEST_CASE("sample_negatives is seeded and order preserving") {
  PrepConfig c;
  const auto in = mix(7, 40);
  const auto a = sample_negatives(in, c);
  CHECK(a == sample_negatives(in, c));
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i - 1].sentence_index < a[i].sentence_index);
  c.rng_seed = 43;
  CHECK(sample_negatives(in, c) != a);
  CHECK(sample_negatives(in, c).size() == a.size());
}

TEST_CASE("split_corpus sizes") {
  PrepConfig c;
  auto docs = synth::make_corpus(10, 1);
  auto s = split_corpus(docs, c);
  CHECK(s.train.size() == 8);
  CHECK(s.validation.size() == 1);
  CHECK(s.test.size() == 1);
  docs.resize(3);
  s = split_corpus(docs, c);
  CHECK((s.train.size() == 1 && s.validation.size() == 1 && s.test.size() == 1));
  CHECK_THROWS_AS(split_corpus({}, c), InsufficientCorpus);
  CHECK_THROWS_AS(split_sizes(2, c), InsufficientCorpus);
  CHECK(split_sizes(100, c) == std::array<std::size_t, 3>{80, 10, 10});
  CHECK(split_sizes(7, c) == std::array<std::size_t, 3>{5, 1, 1});
}

TEST_CASE("split_corpus partitions the corpus deterministically") {
  PrepConfig c;
  const auto docs = synth::make_corpus(37, 2);
  const auto s = split_corpus(docs, c);
  std::multiset<std::string> ids;
  for (const auto* part : {&s.train, &s.validation, &s.test})
    for (const auto& d : *part) ids.insert(d.id);
  std::multiset<std::string> expected;
  for (const auto& d : docs) expected.insert(d.id);
  CHECK(ids == expected);
  const auto again = split_corpus(docs, c);
  CHECK(again.test.front().id == s.test.front().id);
}

TEST_CASE("build_examples labels sentences and drops cross-sentence gold") {
  auto d = ingest_text("Hans Meier klagt. Er verliert gegen Anna Huber.", Language::de);
  attach_gold(d, {make_span(d, {0, 10}, "PER"), make_span(d, {36, 46}, "PER"), make_span(d, {11, 21}, "MISC")});
  PrepStats st;
  const auto ex = build_examples(d, PrepConfig{}, &st);
  REQUIRE(ex.size() == 2);
  CHECK(ex[0].tokens == std::vector<std::string>{"Hans", "Meier", "klagt", "."});
  CHECK(ex[0].labels == std::vector<std::string>{"B-PER", "I-PER", "O", "O"});
  CHECK(ex[1].labels == std::vector<std::string>{"O", "O", "O", "B-PER", "I-PER", "O"});
  CHECK(st.cross_sentence_dropped == 1);
}

TEST_CASE("prepare_dataset keeps all positives in every split") {
  PrepConfig c;
  synth::Config sc;
  sc.filler = 12;
  const auto docs = synth::make_corpus(20, 9, sc);
  const auto p = prepare_dataset(docs, c);
  std::size_t all_pos = 0;
  for (const auto& d : docs)
    for (const auto& e : build_examples(d, c)) all_pos += e.positive();
  const auto& ex = p.examples;
  CHECK(count_positive(ex.train) + count_positive(ex.validation) + count_positive(ex.test) == all_pos);
  for (const auto* part : {&ex.train, &ex.validation, &ex.test}) {
    const auto pos = count_positive(*part);
    CHECK(part->size() - pos <= static_cast<std::size_t>(std::floor(1.5 * static_cast<double>(pos) + 1e-9)));
  }
  CHECK(prepare_dataset(docs, c).examples.train == ex.train);
}

TEST_CASE("corpus_stats counts by hand") {
  auto d = ingest_text("Hans Meier klagt heute .", Language::de);
  attach_gold(d, {make_span(d, {0, 10}, "PER")});
  const auto s = corpus_stats({d});
  REQUIRE(s.documents.size() == 1);
  CHECK(s.documents[0].tokens == 5);
  CHECK(s.documents[0].entities == 1);
  CHECK(s.documents[0].anonymized_tokens == 2);
  CHECK(s.documents[0].anonymized_entities == 1);
  StatsConfig keep_per;
  keep_per.non_anonymized_labels = {"PER"};
  CHECK(count_document(d, keep_per).anonymized_entities == 0);
  CHECK(count_document(d, keep_per).anonymized_tokens == 0);
}

TEST_CASE("corpus_stats on an empty corpus and across languages") {
  const auto empty = corpus_stats({});
  CHECK(empty.documents.empty());
  for (const auto& [lang, ls] : empty.languages) {
    CHECK(ls.documents == 0);
    CHECK(ls.tokens == 0);
    CHECK(ls.tokens_hist.total() == 0);
  }
  const auto de = ingest_text("Das Gericht tagt.", Language::de);
  const auto fr = ingest_text("La cour siège aujourd'hui.", Language::fr);
  const auto both = corpus_stats({de, fr});
  CHECK(both.languages.at(Language::de).tokens == corpus_stats({de}).languages.at(Language::de).tokens);
  CHECK(both.languages.at(Language::fr).tokens == corpus_stats({fr}).languages.at(Language::fr).tokens);
  CHECK(both.languages.at(Language::it).documents == 0);
}

TEST_CASE("log histogram bins") {
  auto h = Histogram::log10(0, 2, 5);
  CHECK(h.counts.size() == 10);
  CHECK(h.bin_edges.front() == 1.0);
  CHECK(h.bin_edges.back() == Catch::Approx(100.0));
  h.add(0.5);
  h.add(1.0);
  h.add(100.0);
  h.add(101.0);
  CHECK(h.underflow == 1);
  CHECK(h.overflow == 1);
  CHECK(h.counts.front() == 1);
  CHECK(h.counts.back() == 1);
  CHECK(h.total() == 4);
}
