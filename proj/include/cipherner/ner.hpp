#ifndef CIPHERNER_NER_HPP
#define CIPHERNER_NER_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cipherner/cipher.hpp"
#include "cipherner/corpus.hpp"
#include "cipherner/nn.hpp"

namespace cipherner::ner {

enum class VocabMode {
  FirstOccurrence,  // parity-critical: injective encryption preserves ids
  Lexicographic,    // ordering differs between plaintext and ciphertext
};

struct TrainConfig {
  size_t embed_dim = 32;
  size_t hidden_dim = 64;
  size_t epochs = 30;
  double lr = 0.01;
  double clip = 5.0;
  uint64_t seed = 42;
  VocabMode vocab_mode = VocabMode::FirstOccurrence;
  bool dev_selection = false;
};

// Token/label sequences independent of whether they came from a plaintext
// corpus or a Text1/2/3 bundle; tokens are opaque strings either way.
struct TaggedSequences {
  std::vector<std::vector<std::string>> tokens;
  std::vector<std::vector<std::string>> labels;
  std::optional<std::array<uint8_t, 32>> fingerprint;  // set for bundles

  size_t size() const { return tokens.size(); }
};

TaggedSequences from_corpus(const corpus::Corpus& corpus);
TaggedSequences from_bundle(const cipher::EncryptedBundle& bundle);

struct TrainedModel {
  nn::ModelParams params;
  corpus::Vocabulary vocab;
  std::vector<std::string> tagset;
  TrainConfig config;
  std::vector<double> loss_history;  // mean NLL per epoch
  std::optional<std::array<uint8_t, 32>> fingerprint;
};

// O first, then B/I/E/S per entity type in first-occurrence order.
std::vector<std::string> build_tagset(const TaggedSequences& data);

// (K+2)^2 allowed-transition mask enforcing BIOES validity: I/E must continue
// a same-type B/I run, B/I never end a sentence or precede anything but their
// own I/E, E and S close like O.
std::vector<uint8_t> build_constraint_mask(const std::vector<std::string>& tagset);

corpus::Vocabulary build_vocab(const TaggedSequences& data, VocabMode mode);

TrainedModel train(const TaggedSequences& data, const TaggedSequences* dev,
                   const TrainConfig& config);

std::vector<std::string> predict(const TrainedModel& model,
                                 const std::vector<std::string>& tokens);

corpus::Metrics evaluate(const TrainedModel& model, const TaggedSequences& test);

// model prefix -> <prefix>.ner1 (binary checkpoint) + <prefix>.meta.json
// (vocabulary, tagset, config).
void save_model(const TrainedModel& model, const std::string& prefix);
TrainedModel load_model(const std::string& prefix);

}  // namespace cipherner::ner

#endif  // CIPHERNER_NER_HPP
