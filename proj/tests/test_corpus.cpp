#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "cipherner/corpus.hpp"
#include "cipherner/rng.hpp"
#include "oracles.hpp"

using namespace cipherner;
using corpus::Corpus;
using corpus::EntitySpan;

namespace {

corpus::SynthConfig small_config() {
  corpus::SynthConfig config;
  config.n_sentences = 60;
  config.vocab_size = 64;
  config.max_len = 16;
  return config;
}

Corpus one_sentence(const std::vector<std::pair<std::string, std::string>>& toks) {
  Corpus c;
  corpus::Sentence s;
  for (const auto& [surface, label] : toks) s.tokens.push_back({surface, label});
  c.sentences.push_back(s);
  return c;
}

}  // namespace

TEST_CASE("label grammar") {
  CHECK(corpus::is_valid_label("O"));
  CHECK(corpus::is_valid_label("B-L"));
  CHECK(corpus::is_valid_label("S-PER"));
  CHECK(corpus::is_valid_label("E-LOC_2"));
  CHECK_FALSE(corpus::is_valid_label(""));
  CHECK_FALSE(corpus::is_valid_label("B-"));
  CHECK_FALSE(corpus::is_valid_label("X-L"));
  CHECK_FALSE(corpus::is_valid_label("B-loc"));
  CHECK_FALSE(corpus::is_valid_label("B-2L"));
  CHECK_FALSE(corpus::is_valid_label("BL"));
}

TEST_CASE("parse_conll rejects empty input") {
  CHECK(oracles::throws_code([] { corpus::parse_conll(""); }, ErrorCode::EmptyCorpus));
}

TEST_CASE("parse_conll minimal well-formed input") {
  auto c = corpus::parse_conll("中\tB-L\n国\tE-L\n\n");
  REQUIRE(c.sentences.size() == 1);
  REQUIRE(c.sentences[0].tokens.size() == 2);
  CHECK(c.sentences[0].tokens[0].surface == "中");
  CHECK(c.sentences[0].tokens[0].label == "B-L");
  CHECK(c.sentences[0].tokens[1].label == "E-L");
}

TEST_CASE("parse_conll error cases") {
  CHECK_THROWS_AS(corpus::parse_conll("no-tab-here\n\n"), Error);
  CHECK_THROWS_AS(corpus::parse_conll("中\tB-l\n\n"), Error);      // bad label
  CHECK_THROWS_AS(corpus::parse_conll("中\tI-L\n\n"), Error);      // I at start
  CHECK_THROWS_AS(corpus::parse_conll("中\tB-L\n\n"), Error);      // unclosed B
  CHECK_THROWS_AS(corpus::parse_conll("\tO\n\n"), Error);          // empty token
  corpus::ParseOptions lenient;
  lenient.strict_transitions = false;
  CHECK(corpus::parse_conll("中\tI-L\n\n", lenient).sentences.size() == 1);
}

TEST_CASE("parse_conll converts BIO input when asked") {
  corpus::ParseOptions options;
  options.bio_input = true;
  auto c = corpus::parse_conll("a\tB-L\nb\tI-L\nc\tO\nd\tB-P\n\n", options);
  auto labels = corpus::labels_of(c.sentences[0]);
  CHECK(labels == std::vector<std::string>{"B-L", "E-L", "O", "S-P"});
}

TEST_CASE("write_conll minimal case and idempotence") {
  auto c = one_sentence({{"山", "S-L"}});
  CHECK(corpus::write_conll(c) == "山\tS-L\n\n");
  auto text = corpus::write_conll(c);
  CHECK(corpus::write_conll(corpus::parse_conll(text)) == text);
}

TEST_CASE("parse/write round trip on generated corpora") {
  for (uint64_t seed = 0; seed < 100; ++seed) {
    auto c = corpus::generate_synthetic(small_config(), seed);
    auto text = corpus::write_conll(c);
    CHECK(corpus::parse_conll(text) == c);

    // Serialized size is fully determined by token/label byte lengths.
    size_t expected = c.sentences.size();
    for (const auto& s : c.sentences) {
      for (const auto& tok : s.tokens) expected += tok.surface.size() + tok.label.size() + 2;
    }
    CHECK(text.size() == expected);
  }
}

TEST_CASE("extract_spans basics") {
  CHECK(corpus::extract_spans({"O", "O", "O"}).empty());
  auto spans = corpus::extract_spans({"B-L", "I-L", "E-L", "O", "S-L"});
  REQUIRE(spans.size() == 2);
  CHECK(spans[0] == EntitySpan{0, 2, "L"});
  CHECK(spans[1] == EntitySpan{4, 4, "L"});
  CHECK_THROWS_AS(corpus::extract_spans({"O", "I-L"}, /*strict=*/true), Error);
}

TEST_CASE("extract_spans inverts spans_to_bioes on generated data") {
  auto c = corpus::generate_synthetic(small_config(), 7);
  for (const auto& s : c.sentences) {
    auto labels = corpus::labels_of(s);
    auto spans = corpus::extract_spans(labels, /*strict=*/true);
    CHECK(corpus::spans_to_bioes(spans, labels.size()) == labels);
    // strictly ordered, non-overlapping
    for (size_t i = 0; i + 1 < spans.size(); ++i) {
      CHECK(spans[i].end < spans[i + 1].start);
    }
  }
}

TEST_CASE("span_f1 identity and hand-counted case") {
  std::vector<std::vector<std::string>> gold = {{"B-L", "I-L", "E-L", "O", "S-L", "O", "O"}};
  auto perfect = corpus::span_f1(gold, gold);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  std::vector<std::vector<std::string>> pred = {{"B-L", "I-L", "E-L", "O", "O", "O", "S-P"}};
  auto m = corpus::span_f1(gold, pred);
  CHECK(m.tp == 1);
  CHECK(m.fp == 1);
  CHECK(m.fn == 1);
  CHECK(m.precision == doctest::Approx(0.5));
  CHECK(m.recall == doctest::Approx(0.5));
  CHECK(m.f1 == doctest::Approx(0.5));

  auto swapped = corpus::span_f1(pred, gold);
  CHECK(swapped.precision == m.recall);
  CHECK(swapped.recall == m.precision);
  CHECK(swapped.f1 == doctest::Approx(m.f1));
}

TEST_CASE("span_f1 conventions and invariants") {
  // All-O prediction against gold with entities: zero precision by convention.
  std::vector<std::vector<std::string>> gold = {{"S-L", "O"}};
  std::vector<std::vector<std::string>> allo = {{"O", "O"}};
  auto m = corpus::span_f1(gold, allo);
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);

  // Both empty: perfect.
  std::vector<std::vector<std::string>> empty = {{"O", "O"}};
  auto e = corpus::span_f1(empty, empty);
  CHECK(e.f1 == 1.0);

  CHECK_THROWS_AS(corpus::span_f1(gold, {{"O"}}), Error);
  CHECK_THROWS_AS(corpus::span_f1(gold, {}), Error);

  Rng rng(11);
  auto c = corpus::generate_synthetic(small_config(), 13);
  std::vector<std::vector<std::string>> g, p;
  for (const auto& s : c.sentences) {
    auto labels = corpus::labels_of(s);
    g.push_back(labels);
    // Corrupt some labels to all-O sentences at random.
    if (rng.chance(0.5)) {
      p.push_back(std::vector<std::string>(labels.size(), "O"));
    } else {
      p.push_back(labels);
    }
  }
  auto r = corpus::span_f1(g, p);
  CHECK(r.precision >= 0.0);
  CHECK(r.precision <= 1.0);
  CHECK(r.recall >= 0.0);
  CHECK(r.recall <= 1.0);
  CHECK(r.f1 <= std::max(r.precision, r.recall) + 1e-12);
  CHECK((r.f1 == 0.0) == (r.tp == 0));
}

TEST_CASE("generate_synthetic determinism and coverage") {
  auto config = small_config();
  auto a = corpus::generate_synthetic(config, 1);
  auto b = corpus::generate_synthetic(config, 1);
  CHECK(corpus::write_conll(a) == corpus::write_conll(b));

  auto c = corpus::generate_synthetic(config, 2);
  CHECK(corpus::write_conll(a) != corpus::write_conll(c));

  // Every entity type appears when n_sentences >= 50.
  std::set<std::string> seen;
  for (const auto& s : a.sentences) {
    for (const auto& span : corpus::extract_spans(corpus::labels_of(s))) {
      seen.insert(span.entity_type);
    }
  }
  CHECK(seen.size() == config.entity_types.size());

  // All sentences BIOES-valid and within the length cap.
  for (const auto& s : a.sentences) {
    CHECK(corpus::is_valid_bioes_sequence(corpus::labels_of(s)));
    CHECK(s.tokens.size() >= 1);
    CHECK(s.tokens.size() <= config.max_len);
  }
}

TEST_CASE("generate_synthetic config validation") {
  auto config = small_config();
  config.vocab_size = 8;
  CHECK_THROWS_AS(corpus::generate_synthetic(config, 1), Error);
  config = small_config();
  config.n_sentences = 0;
  CHECK_THROWS_AS(corpus::generate_synthetic(config, 1), Error);
  config = small_config();
  config.entity_types = {"PER", "per"};
  CHECK_THROWS_AS(corpus::generate_synthetic(config, 1), Error);
  config = small_config();
  config.entity_types = {"PER", "PER"};
  CHECK_THROWS_AS(corpus::generate_synthetic(config, 1), Error);
}

TEST_CASE("split ratios") {
  Corpus c;
  for (int i = 0; i < 100; ++i) {
    corpus::Sentence s;
    s.tokens.push_back({"t" + std::to_string(i), "O"});
    c.sentences.push_back(s);
  }

  auto all_train = corpus::split(c, {1.0, 0.0, 0.0}, 5);
  CHECK(all_train[0].sentences.size() == 100);
  CHECK(all_train[1].sentences.empty());
  CHECK(all_train[2].sentences.empty());

  auto parts = corpus::split(c, {0.8, 0.1, 0.1}, 5);
  CHECK(parts[0].sentences.size() == 80);
  CHECK(parts[1].sentences.size() == 10);
  CHECK(parts[2].sentences.size() == 10);

  // Union re-sorted by original index equals the input. Surfaces are unique,
  // so original indices are recoverable.
  std::vector<std::pair<int, corpus::Sentence>> merged;
  for (const auto& part : parts) {
    int prev = -1;
    for (const auto& s : part.sentences) {
      int idx = std::stoi(s.tokens[0].surface.substr(1));
      CHECK(idx > prev);  // parts preserve original order
      prev = idx;
      merged.emplace_back(idx, s);
    }
  }
  std::sort(merged.begin(), merged.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  REQUIRE(merged.size() == 100);
  for (int i = 0; i < 100; ++i) CHECK(merged[i].second == c.sentences[i]);

  // Deterministic in the seed.
  auto parts2 = corpus::split(c, {0.8, 0.1, 0.1}, 5);
  CHECK(parts[0] == parts2[0]);
  auto parts3 = corpus::split(c, {0.8, 0.1, 0.1}, 6);
  CHECK(parts[0] != parts3[0]);

  CHECK_THROWS_AS(corpus::split(c, {0.5, 0.2, 0.2}, 1), Error);
  CHECK_THROWS_AS(corpus::split(c, {1.2, -0.1, -0.1}, 1), Error);
}

TEST_CASE("synth config file parsing") {
  auto [config, seed] = corpus::parse_synth_config(
      "# comment\nn_sentences=42\nentity_types=AAA,BBB\nvocab_size=32\nmax_len=20\nseed=9\n");
  CHECK(config.n_sentences == 42);
  CHECK(config.entity_types == std::vector<std::string>{"AAA", "BBB"});
  CHECK(config.vocab_size == 32);
  CHECK(config.max_len == 20);
  REQUIRE(seed.has_value());
  CHECK(*seed == 9);

  CHECK_THROWS_AS(corpus::parse_synth_config("bogus_key=1\n"), Error);
  CHECK_THROWS_AS(corpus::parse_synth_config("n_sentences=abc\n"), Error);
}
