#ifndef CIPHERNER_EXPERIMENT_HPP
#define CIPHERNER_EXPERIMENT_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cipherner/cipher.hpp"
#include "cipherner/corpus.hpp"
#include "cipherner/ner.hpp"

namespace cipherner::experiment {

// Five-run protocol: one plaintext training plus four trainings on the same
// split encrypted with shift, base64, md5, and sha256b64, all sharing one
// seed and one model configuration.
struct ParityConfig {
  corpus::SynthConfig synth;
  size_t n_train = 500;
  size_t n_dev = 0;
  size_t n_test = 100;
  ner::TrainConfig train;
  uint64_t seed = 42;
};

struct VariantResult {
  std::string scheme;  // "plaintext" or a cipher scheme name
  corpus::Metrics metrics;
  double delta_f1 = 0.0;  // vs the plaintext row; exactly 0 for plaintext
  double wall_seconds = 0.0;
  std::vector<uint8_t> checkpoint;
};

struct ParityReport {
  ParityConfig config;
  std::vector<VariantResult> rows;  // plaintext first
};

// The cipher variants of the protocol, in report order.
std::vector<cipher::CipherScheme> parity_schemes();

ParityReport run_parity(const ParityConfig& config);

// Aligned table plus a machine-readable key=value block.
std::string render_report(const ParityReport& report);

// Reads synth keys (n_sentences, entity_types, vocab_size, max_len, seed)
// plus n_train/n_dev/n_test, epochs, lr, clip, embed_dim, hidden_dim, and
// vocab_mode (first|lex).
ParityConfig parse_parity_config(std::string_view text);

}  // namespace cipherner::experiment

#endif  // CIPHERNER_EXPERIMENT_HPP
