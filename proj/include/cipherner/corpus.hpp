#ifndef CIPHERNER_CORPUS_HPP
#define CIPHERNER_CORPUS_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cipherner/error.hpp"

namespace cipherner::corpus {

// One corpus token (typically a single CJK character) with its BIOES tag.
struct LabeledToken {
  std::string surface;
  std::string label;

  bool operator==(const LabeledToken&) const = default;
};

struct Sentence {
  std::vector<LabeledToken> tokens;

  bool operator==(const Sentence&) const = default;
};

struct Corpus {
  std::vector<Sentence> sentences;
  std::string scheme = "BIOES";

  bool operator==(const Corpus&) const = default;
};

// Inclusive token range [start, end] of one entity.
struct EntitySpan {
  size_t start = 0;
  size_t end = 0;
  std::string entity_type;

  bool operator==(const EntitySpan&) const = default;
  auto operator<=>(const EntitySpan&) const = default;
};

// Micro-averaged span precision/recall/F1.
struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  uint64_t tp = 0;
  uint64_t fp = 0;
  uint64_t fn = 0;
};

// Distinct token surfaces; id 0 is reserved for the unknown token, stored
// surfaces get ids 1..size()-1.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Returns true if the surface was new.
  bool add(const std::string& surface) {
    if (index_.count(surface)) return false;
    index_.emplace(surface, surfaces_.size() + 1);
    surfaces_.push_back(surface);
    return true;
  }

  // 0 for unknown surfaces.
  size_t id_of(const std::string& surface) const {
    auto it = index_.find(surface);
    return it == index_.end() ? 0 : it->second;
  }

  bool contains(const std::string& surface) const { return index_.count(surface) != 0; }

  // Number of ids including the unknown slot.
  size_t size() const { return surfaces_.size() + 1; }

  const std::vector<std::string>& surfaces() const { return surfaces_; }

 private:
  std::vector<std::string> surfaces_;
  std::unordered_map<std::string, size_t> index_;
};

inline constexpr size_t kMaxSentenceLen = 512;

struct ParseOptions {
  bool strict_transitions = true;   // reject BIOES-invalid label sequences
  bool bio_input = false;           // convert BIO-tagged input to BIOES
  size_t max_sentence_len = kMaxSentenceLen;
};

// Label grammar: `O` or `{B|I|E|S}-<TYPE>` with TYPE an uppercase ASCII
// identifier ([A-Z][A-Z0-9_]*).
bool is_valid_label(std::string_view label);

// Splits "B-LOC" into ('B', "LOC"); "O" into ('O', "").
std::pair<char, std::string> split_label(std::string_view label);

bool is_valid_bioes_sequence(const std::vector<std::string>& labels);

std::vector<std::string> bio_to_bioes(const std::vector<std::string>& labels);

Corpus parse_conll(std::string_view text, const ParseOptions& options = {});

std::string write_conll(const Corpus& corpus);

// Spans of a BIOES label sequence, sorted by start, non-overlapping.
// strict=true raises InvalidTransition on malformed sequences; otherwise
// unexpected I/E tags open or extend spans best-effort.
std::vector<EntitySpan> extract_spans(const std::vector<std::string>& labels,
                                      bool strict = false);

// Inverse of extract_spans for a sequence of the given length.
std::vector<std::string> spans_to_bioes(const std::vector<EntitySpan>& spans, size_t len);

Metrics span_f1(const std::vector<std::vector<std::string>>& gold,
                const std::vector<std::vector<std::string>>& pred);
Metrics span_f1(const Corpus& gold, const std::vector<std::vector<std::string>>& pred);

std::vector<std::string> labels_of(const Sentence& sentence);
std::vector<std::string> tokens_of(const Sentence& sentence);

struct SynthConfig {
  size_t n_sentences = 600;
  std::vector<std::string> entity_types = {"PER", "LOC", "ORG", "DAT"};
  size_t vocab_size = 200;
  size_t max_len = 18;
};

// Deterministic synthetic corpus. Tokens are single CJK characters drawn
// from pools: a context pool used only in O runs, one pool per entity type,
// and a shared noise pool (~10% of the vocabulary) mixed into every segment.
// Each sentence carries at least one entity; the first K entities cycle
// through all K types so every type appears whenever n_sentences >= K.
Corpus generate_synthetic(const SynthConfig& config, uint64_t seed);

// Deterministic shuffle + split. Parts preserve the original sentence order
// within themselves. Ratios must be non-negative and sum to 1 (1e-9).
std::array<Corpus, 3> split(const Corpus& corpus, std::array<double, 3> ratios,
                            uint64_t seed);

// Exact-count variant used by the parity experiment.
std::array<Corpus, 3> split_counts(const Corpus& corpus, size_t n_train,
                                   size_t n_dev, uint64_t seed);

// key=value config file (# comments, blank lines ignored).
std::map<std::string, std::string> parse_kv_file(std::string_view text);

// Reads keys n_sentences, entity_types, vocab_size, max_len; returns the
// seed key separately when present. Unknown keys raise ConfigInvalid.
std::pair<SynthConfig, std::optional<uint64_t>> parse_synth_config(
    std::string_view text);

}  // namespace cipherner::corpus

#endif  // CIPHERNER_CORPUS_HPP
