#ifndef CIPHERNER_CIPHER_HPP
#define CIPHERNER_CIPHER_HPP

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cipherner/corpus.hpp"
#include "cipherner/error.hpp"

namespace cipherner::cipher {

enum class SchemeKind {
  Identity,
  Shift,
  Affine,
  Base64,
  Md5Hex,
  Sha256Hex,
  Sha256ThenBase64,
};

// Contiguous codepoint range for the symbol ciphers. Default is the CJK
// Unified Ideographs block.
struct Alphabet {
  char32_t lo = 0x4E00;
  char32_t hi = 0x9FFF;

  uint64_t size() const { return static_cast<uint64_t>(hi) - lo + 1; }
  bool contains(char32_t c) const { return c >= lo && c <= hi; }
  bool operator==(const Alphabet&) const = default;
};

struct CipherScheme {
  SchemeKind kind = SchemeKind::Identity;
  uint64_t shift_key = 0;      // Shift
  uint64_t affine_a = 1;       // Affine
  uint64_t affine_b = 0;
  Alphabet alphabet;           // Shift/Affine only
  bool passthrough = false;    // map out-of-alphabet tokens to themselves

  // Canonical scheme name as used in codebook headers and CLI flags.
  std::string name() const;
  // Canonical parameter string ("" for parameterless schemes).
  std::string canonical_params() const;

  // Parses "identity", "shift:3", "affine:5:8", "base64", "md5", "sha256",
  // "sha256b64".
  static CipherScheme parse(std::string_view text);
  static CipherScheme from_name_params(std::string_view name, std::string_view params);

  bool operator==(const CipherScheme&) const = default;
};

// Symbol ciphers; every codepoint of the token must lie in the alphabet.
std::string shift_encrypt(std::string_view token, uint64_t key, Alphabet alphabet);
std::string shift_decrypt(std::string_view token, uint64_t key, Alphabet alphabet);
std::string affine_encrypt(std::string_view token, uint64_t a, uint64_t b, Alphabet alphabet);

// Applies the scheme to a single token type.
std::string apply_scheme(const CipherScheme& scheme, std::string_view token);

// Injective plaintext-type -> ciphertext-type map in vocabulary order.
struct Codebook {
  CipherScheme scheme;
  std::vector<std::pair<std::string, std::string>> entries;
  std::array<uint8_t, 32> fingerprint{};

  const std::string* ciphertext_of(const std::string& plaintext) const {
    auto it = index_.find(plaintext);
    return it == index_.end() ? nullptr : &entries[it->second].second;
  }

  void rebuild_index() {
    index_.clear();
    for (size_t i = 0; i < entries.size(); ++i) index_.emplace(entries[i].first, i);
  }

 private:
  std::unordered_map<std::string, size_t> index_;
};

// Builds, verifies injectivity (CollisionDetected on failure), and
// fingerprints the codebook (sha256 of the canonical serialization).
Codebook build_codebook(const corpus::Vocabulary& vocab, const CipherScheme& scheme);

// Canonical serialization covered by the fingerprint: a scheme line followed
// by one `plaintext<TAB>ciphertext` line per entry.
std::string codebook_canonical(const Codebook& codebook);

// Codebook file: `#scheme=<name>;params=<params>;fingerprint=<hex>` header,
// then the canonical entry lines.
std::string write_codebook(const Codebook& codebook);
Codebook parse_codebook(std::string_view text);

// Text1 = ciphertext token sequences, Text2 = label sequences, Text3 =
// sequence lengths.
struct EncryptedBundle {
  std::vector<std::vector<std::string>> text1;
  std::vector<std::vector<std::string>> text2;
  std::vector<size_t> text3;
  std::array<uint8_t, 32> codebook_fingerprint{};
};

void validate_bundle(const EncryptedBundle& bundle);

// strict=true requires every token in the codebook; otherwise unknown tokens
// are mapped through the scheme on the fly.
EncryptedBundle encrypt_corpus(const corpus::Corpus& corpus, const Codebook& codebook,
                               bool strict = false);

// Inverts Text1 through the stored codebook; fingerprints must match.
corpus::Corpus decrypt_bundle(const EncryptedBundle& bundle, const Codebook& codebook);

// Text1/Text2: one sentence per line, tokens separated by single spaces.
// Text3: one decimal length per line.
std::string write_token_lines(const std::vector<std::vector<std::string>>& lines);
std::vector<std::vector<std::string>> parse_token_lines(std::string_view text);
std::string write_length_lines(const std::vector<size_t>& lengths);
std::vector<size_t> parse_length_lines(std::string_view text);

EncryptedBundle bundle_from_texts(std::string_view text1, std::string_view text2,
                                  std::string_view text3,
                                  const std::array<uint8_t, 32>& fingerprint);

}  // namespace cipherner::cipher

#endif  // CIPHERNER_CIPHER_HPP
