#include "cipherner/cipher.hpp"

#include <charconv>
#include <cstdio>
#include <numeric>
#include <unordered_set>

#include "cipherner/digest.hpp"
#include "cipherner/utf8.hpp"

namespace cipherner::cipher {

namespace {

uint64_t parse_u64_strict(std::string_view s, const char* what) {
  uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw Error(ErrorCode::ConfigInvalid, std::string("bad ") + what + " '" + std::string(s) + "'");
  }
  return out;
}

bool token_in_alphabet(const std::vector<char32_t>& cps, Alphabet alphabet) {
  for (char32_t c : cps) {
    if (!alphabet.contains(c)) return false;
  }
  return true;
}

}  // namespace

std::string CipherScheme::name() const {
  switch (kind) {
    case SchemeKind::Identity: return "identity";
    case SchemeKind::Shift: return "shift";
    case SchemeKind::Affine: return "affine";
    case SchemeKind::Base64: return "base64";
    case SchemeKind::Md5Hex: return "md5";
    case SchemeKind::Sha256Hex: return "sha256";
    case SchemeKind::Sha256ThenBase64: return "sha256b64";
  }
  return "?";
}

std::string CipherScheme::canonical_params() const {
  char buf[96];
  switch (kind) {
    case SchemeKind::Shift:
      std::snprintf(buf, sizeof buf, "key=%llu,lo=%X,hi=%X",
                    static_cast<unsigned long long>(shift_key),
                    static_cast<unsigned>(alphabet.lo), static_cast<unsigned>(alphabet.hi));
      return buf;
    case SchemeKind::Affine:
      std::snprintf(buf, sizeof buf, "a=%llu,b=%llu,lo=%X,hi=%X",
                    static_cast<unsigned long long>(affine_a),
                    static_cast<unsigned long long>(affine_b),
                    static_cast<unsigned>(alphabet.lo), static_cast<unsigned>(alphabet.hi));
      return buf;
    default:
      return "";
  }
}

CipherScheme CipherScheme::parse(std::string_view text) {
  CipherScheme scheme;
  size_t colon = text.find(':');
  std::string_view head = text.substr(0, colon);
  if (head == "identity") {
    scheme.kind = SchemeKind::Identity;
  } else if (head == "shift") {
    scheme.kind = SchemeKind::Shift;
    if (colon == std::string_view::npos) {
      throw Error(ErrorCode::ConfigInvalid, "shift needs a key, e.g. shift:3");
    }
    scheme.shift_key = parse_u64_strict(text.substr(colon + 1), "shift key");
  } else if (head == "affine") {
    scheme.kind = SchemeKind::Affine;
    if (colon == std::string_view::npos) {
      throw Error(ErrorCode::ConfigInvalid, "affine needs a:b, e.g. affine:5:8");
    }
    std::string_view rest = text.substr(colon + 1);
    size_t colon2 = rest.find(':');
    if (colon2 == std::string_view::npos) {
      throw Error(ErrorCode::ConfigInvalid, "affine needs a:b, e.g. affine:5:8");
    }
    scheme.affine_a = parse_u64_strict(rest.substr(0, colon2), "affine a");
    scheme.affine_b = parse_u64_strict(rest.substr(colon2 + 1), "affine b");
  } else if (head == "base64") {
    scheme.kind = SchemeKind::Base64;
  } else if (head == "md5") {
    scheme.kind = SchemeKind::Md5Hex;
  } else if (head == "sha256") {
    scheme.kind = SchemeKind::Sha256Hex;
  } else if (head == "sha256b64") {
    scheme.kind = SchemeKind::Sha256ThenBase64;
  } else {
    throw Error(ErrorCode::ConfigInvalid, "unknown scheme '" + std::string(text) + "'");
  }
  return scheme;
}

CipherScheme CipherScheme::from_name_params(std::string_view name, std::string_view params) {
  CipherScheme scheme = parse(name == "shift"    ? std::string_view("shift:0")
                              : name == "affine" ? std::string_view("affine:1:0")
                                                 : name);
  if (scheme.kind == SchemeKind::Shift || scheme.kind == SchemeKind::Affine) {
    std::string_view rest = params;
    while (!rest.empty()) {
      size_t comma = rest.find(',');
      std::string_view item = rest.substr(0, comma);
      size_t eq = item.find('=');
      if (eq == std::string_view::npos) {
        throw Error(ErrorCode::ConfigInvalid, "bad scheme params '" + std::string(params) + "'");
      }
      std::string_view key = item.substr(0, eq);
      std::string_view value = item.substr(eq + 1);
      if (key == "key") {
        scheme.shift_key = parse_u64_strict(value, "key");
      } else if (key == "a") {
        scheme.affine_a = parse_u64_strict(value, "a");
      } else if (key == "b") {
        scheme.affine_b = parse_u64_strict(value, "b");
      } else if (key == "lo" || key == "hi") {
        uint64_t cp = 0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), cp, 16);
        if (ec != std::errc() || ptr != value.data() + value.size()) {
          throw Error(ErrorCode::ConfigInvalid, "bad codepoint '" + std::string(value) + "'");
        }
        (key == "lo" ? scheme.alphabet.lo : scheme.alphabet.hi) = static_cast<char32_t>(cp);
      } else {
        throw Error(ErrorCode::ConfigInvalid, "unknown scheme param '" + std::string(key) + "'");
      }
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  } else if (!params.empty()) {
    throw Error(ErrorCode::ConfigInvalid, "scheme takes no params");
  }
  return scheme;
}

std::string shift_encrypt(std::string_view token, uint64_t key, Alphabet alphabet) {
  uint64_t m = alphabet.size();
  key %= m;
  auto cps = utf8::decode(token);
  for (auto& c : cps) {
    if (!alphabet.contains(c)) {
      throw Error(ErrorCode::OutOfAlphabet, "codepoint outside cipher alphabet");
    }
    uint64_t offset = (static_cast<uint64_t>(c) - alphabet.lo + key) % m;
    c = alphabet.lo + static_cast<char32_t>(offset);
  }
  return utf8::encode(cps);
}

std::string shift_decrypt(std::string_view token, uint64_t key, Alphabet alphabet) {
  uint64_t m = alphabet.size();
  return shift_encrypt(token, m - key % m, alphabet);
}

std::string affine_encrypt(std::string_view token, uint64_t a, uint64_t b, Alphabet alphabet) {
  uint64_t m = alphabet.size();
  if (std::gcd(a % m == 0 ? m : a % m, m) != 1) {
    throw Error(ErrorCode::NonInvertibleA, "gcd(a, alphabet size) != 1");
  }
  auto cps = utf8::decode(token);
  for (auto& c : cps) {
    if (!alphabet.contains(c)) {
      throw Error(ErrorCode::OutOfAlphabet, "codepoint outside cipher alphabet");
    }
    uint64_t x = static_cast<uint64_t>(c) - alphabet.lo;
    uint64_t y = ((a % m) * x % m + b % m) % m;
    c = alphabet.lo + static_cast<char32_t>(y);
  }
  return utf8::encode(cps);
}

std::string apply_scheme(const CipherScheme& scheme, std::string_view token) {
  switch (scheme.kind) {
    case SchemeKind::Identity:
      return std::string(token);
    case SchemeKind::Shift:
    case SchemeKind::Affine: {
      if (scheme.passthrough && !token_in_alphabet(utf8::decode(token), scheme.alphabet)) {
        return std::string(token);
      }
      if (scheme.kind == SchemeKind::Shift) {
        return shift_encrypt(token, scheme.shift_key, scheme.alphabet);
      }
      return affine_encrypt(token, scheme.affine_a, scheme.affine_b, scheme.alphabet);
    }
    case SchemeKind::Base64:
      return digest::base64_encode(token);
    case SchemeKind::Md5Hex:
      return digest::md5_hex(token);
    case SchemeKind::Sha256Hex:
      return digest::sha256_hex(token);
    case SchemeKind::Sha256ThenBase64: {
      auto raw = digest::Sha256::of(token);
      return digest::base64_encode(raw.data(), raw.size());
    }
  }
  throw Error(ErrorCode::ConfigInvalid, "unhandled scheme");
}

Codebook build_codebook(const corpus::Vocabulary& vocab, const CipherScheme& scheme) {
  if (vocab.surfaces().empty()) {
    throw Error(ErrorCode::EmptyCorpus, "empty vocabulary");
  }
  Codebook codebook;
  codebook.scheme = scheme;
  codebook.entries.reserve(vocab.surfaces().size());
  std::unordered_set<std::string> images;
  for (const auto& surface : vocab.surfaces()) {
    std::string image = apply_scheme(scheme, surface);
    if (!images.insert(image).second) {
      throw Error(ErrorCode::CollisionDetected,
                  "two vocabulary tokens map to '" + image + "'");
    }
    codebook.entries.emplace_back(surface, std::move(image));
  }
  codebook.rebuild_index();
  codebook.fingerprint = digest::Sha256::of(codebook_canonical(codebook));
  return codebook;
}

std::string codebook_canonical(const Codebook& codebook) {
  std::string out = "scheme=" + codebook.scheme.name() +
                    ";params=" + codebook.scheme.canonical_params() + "\n";
  for (const auto& [plain, ct] : codebook.entries) {
    out += plain;
    out += '\t';
    out += ct;
    out += '\n';
  }
  return out;
}

std::string write_codebook(const Codebook& codebook) {
  std::string out = "#scheme=" + codebook.scheme.name() +
                    ";params=" + codebook.scheme.canonical_params() +
                    ";fingerprint=" + digest::to_hex(codebook.fingerprint) + "\n";
  for (const auto& [plain, ct] : codebook.entries) {
    out += plain;
    out += '\t';
    out += ct;
    out += '\n';
  }
  return out;
}

Codebook parse_codebook(std::string_view text) {
  size_t eol = text.find('\n');
  if (eol == std::string_view::npos || text.empty() || text[0] != '#') {
    throw Error(ErrorCode::MalformedLine, "codebook missing header line");
  }
  std::string_view header = text.substr(1, eol - 1);

  std::string name, params, fp_hex;
  std::string_view rest = header;
  while (!rest.empty()) {
    size_t semi = rest.find(';');
    std::string_view item = rest.substr(0, semi);
    size_t eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::MalformedLine, "bad codebook header field");
    }
    std::string_view key = item.substr(0, eq);
    std::string_view value = item.substr(eq + 1);
    if (key == "scheme") {
      name = std::string(value);
    } else if (key == "params") {
      params = std::string(value);
    } else if (key == "fingerprint") {
      fp_hex = std::string(value);
    } else {
      throw Error(ErrorCode::MalformedLine, "unknown codebook header field");
    }
    if (semi == std::string_view::npos) break;
    rest = rest.substr(semi + 1);
  }

  Codebook codebook;
  codebook.scheme = CipherScheme::from_name_params(name, params);

  size_t pos = eol + 1;
  while (pos < text.size()) {
    size_t line_end = text.find('\n', pos);
    std::string_view line = (line_end == std::string_view::npos)
                                ? text.substr(pos)
                                : text.substr(pos, line_end - pos);
    if (!line.empty()) {
      size_t tab = line.find('\t');
      if (tab == std::string_view::npos) {
        throw Error(ErrorCode::MalformedLine, "codebook entry without TAB");
      }
      codebook.entries.emplace_back(std::string(line.substr(0, tab)),
                                    std::string(line.substr(tab + 1)));
    }
    if (line_end == std::string_view::npos) break;
    pos = line_end + 1;
  }
  codebook.rebuild_index();
  codebook.fingerprint = digest::Sha256::of(codebook_canonical(codebook));

  if (fp_hex.size() != 64 || fp_hex != digest::to_hex(codebook.fingerprint)) {
    throw Error(ErrorCode::FingerprintMismatch, "codebook fingerprint does not match contents");
  }
  return codebook;
}

void validate_bundle(const EncryptedBundle& bundle) {
  if (bundle.text1.size() != bundle.text2.size() ||
      bundle.text1.size() != bundle.text3.size()) {
    throw Error(ErrorCode::BundleInvalid, "Text1/Text2/Text3 sequence counts differ");
  }
  for (size_t i = 0; i < bundle.text1.size(); ++i) {
    if (bundle.text1[i].size() != bundle.text2[i].size() ||
        bundle.text1[i].size() != bundle.text3[i]) {
      throw Error(ErrorCode::BundleInvalid,
                  "length mismatch in sequence " + std::to_string(i));
    }
  }
}

EncryptedBundle encrypt_corpus(const corpus::Corpus& corpus, const Codebook& codebook,
                               bool strict) {
  EncryptedBundle bundle;
  bundle.codebook_fingerprint = codebook.fingerprint;
  bundle.text1.reserve(corpus.sentences.size());
  bundle.text2.reserve(corpus.sentences.size());
  bundle.text3.reserve(corpus.sentences.size());
  for (const auto& sentence : corpus.sentences) {
    std::vector<std::string> cts;
    std::vector<std::string> labels;
    cts.reserve(sentence.tokens.size());
    labels.reserve(sentence.tokens.size());
    for (const auto& tok : sentence.tokens) {
      const std::string* ct = codebook.ciphertext_of(tok.surface);
      if (ct != nullptr) {
        cts.push_back(*ct);
      } else if (strict) {
        throw Error(ErrorCode::UnknownToken, "token not in codebook: '" + tok.surface + "'");
      } else {
        cts.push_back(apply_scheme(codebook.scheme, tok.surface));
      }
      labels.push_back(tok.label);
    }
    bundle.text3.push_back(cts.size());
    bundle.text1.push_back(std::move(cts));
    bundle.text2.push_back(std::move(labels));
  }
  return bundle;
}

corpus::Corpus decrypt_bundle(const EncryptedBundle& bundle, const Codebook& codebook) {
  if (bundle.codebook_fingerprint != codebook.fingerprint) {
    throw Error(ErrorCode::FingerprintMismatch, "bundle was made with a different codebook");
  }
  validate_bundle(bundle);

  std::unordered_map<std::string, const std::string*> reverse;
  reverse.reserve(codebook.entries.size());
  for (const auto& [plain, ct] : codebook.entries) reverse.emplace(ct, &plain);

  corpus::Corpus out;
  out.sentences.reserve(bundle.text1.size());
  for (size_t i = 0; i < bundle.text1.size(); ++i) {
    corpus::Sentence sentence;
    sentence.tokens.reserve(bundle.text1[i].size());
    for (size_t j = 0; j < bundle.text1[i].size(); ++j) {
      auto it = reverse.find(bundle.text1[i][j]);
      if (it == reverse.end()) {
        throw Error(ErrorCode::UnknownCiphertext,
                    "ciphertext token not in codebook: '" + bundle.text1[i][j] + "'");
      }
      sentence.tokens.push_back({*it->second, bundle.text2[i][j]});
    }
    out.sentences.push_back(std::move(sentence));
  }
  return out;
}

std::string write_token_lines(const std::vector<std::vector<std::string>>& lines) {
  std::string out;
  for (const auto& line : lines) {
    for (size_t i = 0; i < line.size(); ++i) {
      if (i > 0) out += ' ';
      out += line[i];
    }
    out += '\n';
  }
  return out;
}

std::vector<std::vector<std::string>> parse_token_lines(std::string_view text) {
  std::vector<std::vector<std::string>> out;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view line = (eol == std::string_view::npos)
                                ? text.substr(pos)
                                : text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> tokens;
    size_t start = 0;
    while (start < line.size()) {
      size_t space = line.find(' ', start);
      std::string_view tok = (space == std::string_view::npos)
                                 ? line.substr(start)
                                 : line.substr(start, space - start);
      if (tok.empty()) {
        throw Error(ErrorCode::MalformedLine, "empty token (double space?)");
      }
      tokens.emplace_back(tok);
      if (space == std::string_view::npos) break;
      start = space + 1;
    }
    out.push_back(std::move(tokens));
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return out;
}

std::string write_length_lines(const std::vector<size_t>& lengths) {
  std::string out;
  for (size_t len : lengths) {
    out += std::to_string(len);
    out += '\n';
  }
  return out;
}

std::vector<size_t> parse_length_lines(std::string_view text) {
  std::vector<size_t> out;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view line = (eol == std::string_view::npos)
                                ? text.substr(pos)
                                : text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) {
      out.push_back(parse_u64_strict(line, "sequence length"));
    } else {
      throw Error(ErrorCode::MalformedLine, "blank line in lengths file");
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return out;
}

EncryptedBundle bundle_from_texts(std::string_view text1, std::string_view text2,
                                  std::string_view text3,
                                  const std::array<uint8_t, 32>& fingerprint) {
  EncryptedBundle bundle;
  bundle.text1 = parse_token_lines(text1);
  bundle.text2 = parse_token_lines(text2);
  bundle.text3 = parse_length_lines(text3);
  bundle.codebook_fingerprint = fingerprint;
  validate_bundle(bundle);
  return bundle;
}

}  // namespace cipherner::cipher
