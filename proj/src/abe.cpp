#include "cipherner/abe.hpp"

#include <algorithm>
#include <charconv>
#include <random>
#include <set>

#include "cipherner/digest.hpp"
#include "cipherner/error.hpp"

namespace cipherner::abe {

namespace {

bool is_attr_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
         c == '_' || c == '.' || c == ':' || c == '-';
}

struct PolicyParser {
  std::string_view text;
  size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' ||
                                 text[pos] == '\n' || text[pos] == '\r')) {
      ++pos;
    }
  }

  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) {
      throw Error(ErrorCode::SyntaxError,
                  std::string("expected '") + c + "' at offset " + std::to_string(pos));
    }
  }

  std::string word() {
    skip_ws();
    size_t start = pos;
    while (pos < text.size() && is_attr_char(text[pos])) ++pos;
    if (pos == start) {
      throw Error(ErrorCode::SyntaxError, "expected attribute at offset " + std::to_string(pos));
    }
    return std::string(text.substr(start, pos - start));
  }

  // Peeks the next keyword-like word without consuming it.
  std::string peek_word() {
    skip_ws();
    size_t p = pos;
    while (p < text.size() && is_attr_char(text[p])) ++p;
    return std::string(text.substr(pos, p - pos));
  }

  size_t parse_or(AccessTree& tree) {
    size_t left = parse_and(tree);
    for (;;) {
      if (peek_word() == "OR") {
        word();
        size_t right = parse_and(tree);
        left = tree.add_gate(1, {left, right});
      } else {
        return left;
      }
    }
  }

  size_t parse_and(AccessTree& tree) {
    size_t left = parse_atom(tree);
    for (;;) {
      if (peek_word() == "AND") {
        word();
        size_t right = parse_atom(tree);
        left = tree.add_gate(2, {left, right});
      } else {
        return left;
      }
    }
  }

  size_t parse_atom(AccessTree& tree) {
    skip_ws();
    if (eat('(')) {
      size_t inner = parse_or(tree);
      expect(')');
      return inner;
    }
    std::string w = word();
    if (w == "THRESHOLD") {
      expect('(');
      skip_ws();
      size_t num_start = pos;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
      if (pos == num_start) {
        throw Error(ErrorCode::SyntaxError, "THRESHOLD needs an integer threshold");
      }
      uint32_t t = 0;
      std::from_chars(text.data() + num_start, text.data() + pos, t);
      std::vector<size_t> children;
      while (eat(',')) children.push_back(parse_or(tree));
      expect(')');
      if (children.size() < 2) {
        throw Error(ErrorCode::SyntaxError, "THRESHOLD needs at least two children");
      }
      if (t < 1 || t > children.size()) {
        throw Error(ErrorCode::ThresholdOutOfRange,
                    "threshold " + std::to_string(t) + " of " + std::to_string(children.size()));
      }
      return tree.add_gate(t, children);
    }
    if (w == "AND" || w == "OR") {
      throw Error(ErrorCode::SyntaxError, "'" + w + "' is not an attribute");
    }
    return tree.add_leaf(w);
  }
};

void append_u32_be(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void append_u64_be(std::vector<uint8_t>& out, uint64_t v) {
  append_u32_be(out, static_cast<uint32_t>(v >> 32));
  append_u32_be(out, static_cast<uint32_t>(v));
}

struct ByteReader {
  const std::vector<uint8_t>& bytes;
  size_t pos = 0;

  uint32_t u32_be() {
    if (pos + 4 > bytes.size()) {
      throw Error(ErrorCode::MalformedCiphertext, "truncated length field");
    }
    uint32_t v = (static_cast<uint32_t>(bytes[pos]) << 24) |
                 (static_cast<uint32_t>(bytes[pos + 1]) << 16) |
                 (static_cast<uint32_t>(bytes[pos + 2]) << 8) |
                 static_cast<uint32_t>(bytes[pos + 3]);
    pos += 4;
    return v;
  }

  std::vector<uint8_t> take(size_t n) {
    if (pos + n > bytes.size()) {
      throw Error(ErrorCode::MalformedCiphertext, "truncated section");
    }
    std::vector<uint8_t> out(bytes.begin() + pos, bytes.begin() + pos + n);
    pos += n;
    return out;
  }

  std::vector<uint8_t> section() { return take(u32_be()); }

  void expect_magic(const char* magic) {
    auto m = take(4);
    if (!std::equal(m.begin(), m.end(), magic)) {
      throw Error(ErrorCode::MalformedCiphertext, "bad magic");
    }
  }

  void expect_end() {
    if (pos != bytes.size()) {
      throw Error(ErrorCode::MalformedCiphertext, "trailing bytes");
    }
  }
};

void append_section(std::vector<uint8_t>& out, const uint8_t* data, size_t len) {
  append_u32_be(out, static_cast<uint32_t>(len));
  out.insert(out.end(), data, data + len);
}

void append_section(std::vector<uint8_t>& out, std::string_view s) {
  append_section(out, reinterpret_cast<const uint8_t*>(s.data()), s.size());
}

std::array<uint8_t, 32> derive_attr_key(const AbeMasterKey& mk, const std::string& attr) {
  digest::Sha256 h;
  h.update(mk.master_secret.data(), mk.master_secret.size());
  uint8_t domain = 0x01;
  h.update(&domain, 1);
  h.update(attr.data(), attr.size());
  return h.finish();
}

std::array<uint8_t, 32> leaf_mask(const std::array<uint8_t, 32>& attr_key,
                                  const std::array<uint8_t, 16>& nonce, uint32_t leaf_index) {
  digest::Sha256 h;
  h.update(attr_key.data(), attr_key.size());
  h.update(nonce.data(), nonce.size());
  std::vector<uint8_t> idx;
  append_u32_be(idx, leaf_index);
  h.update(idx.data(), idx.size());
  return h.finish();
}

std::array<uint8_t, 32> xor32(const std::array<uint8_t, 32>& a,
                              const std::array<uint8_t, 32>& b) {
  std::array<uint8_t, 32> out;
  for (size_t i = 0; i < 32; ++i) out[i] = a[i] ^ b[i];
  return out;
}

// Keystream block i = sha256(key || be64(i)).
void keystream_xor(const std::array<uint8_t, 32>& key, std::vector<uint8_t>& data) {
  for (size_t block = 0; block * 32 < data.size(); ++block) {
    digest::Sha256 h;
    h.update(key.data(), key.size());
    std::vector<uint8_t> ctr;
    append_u64_be(ctr, block);
    h.update(ctr.data(), ctr.size());
    auto ks = h.finish();
    size_t base = block * 32;
    size_t n = std::min<size_t>(32, data.size() - base);
    for (size_t i = 0; i < n; ++i) data[base + i] ^= ks[i];
  }
}

std::array<uint8_t, 32> payload_key(const field::Fp& s, const std::array<uint8_t, 16>& nonce) {
  auto s_bytes = s.to_bytes_le();
  digest::Sha256 h;
  h.update(s_bytes.data(), s_bytes.size());
  h.update(nonce.data(), nonce.size());
  return h.finish();
}

std::array<uint8_t, 32> mac_key_of(const field::Fp& s) {
  auto s_bytes = s.to_bytes_le();
  digest::Sha256 h;
  h.update(s_bytes.data(), s_bytes.size());
  h.update("mac", 3);
  return h.finish();
}

std::array<uint8_t, 32> compute_tag(const std::array<uint8_t, 32>& mac_key,
                                    const std::string& policy_text,
                                    const std::vector<uint8_t>& payload_ct) {
  digest::Sha256 h;
  h.update(mac_key.data(), mac_key.size());
  h.update(policy_text.data(), policy_text.size());
  h.update(payload_ct.data(), payload_ct.size());
  return h.finish();
}

uint64_t system_entropy() {
  std::random_device rd;
  return (static_cast<uint64_t>(rd()) << 32) ^ rd();
}

void share_rec(const AccessTree& tree, size_t node_idx, const field::Fp& secret, Rng& rng,
               std::vector<std::pair<std::string, field::Fp>>& out) {
  const auto& node = tree.node(node_idx);
  if (node.is_leaf()) {
    out.emplace_back(node.attribute, secret);
    return;
  }
  std::vector<field::Fp> coeffs;
  coeffs.reserve(node.threshold);
  coeffs.push_back(secret);
  for (uint32_t i = 1; i < node.threshold; ++i) coeffs.push_back(field::Fp::random(rng));
  for (size_t i = 0; i < node.children.size(); ++i) {
    field::Fp child_secret = field::poly_eval(coeffs, field::Fp(static_cast<uint64_t>(i + 1)));
    share_rec(tree, node.children[i], child_secret, rng, out);
  }
}

// Walks the tree in the share_secret leaf order, unmasking shares the key
// holder is entitled to. Returns the node secret when the subtree is live.
std::optional<field::Fp> recover_rec(const AccessTree& tree, size_t node_idx,
                                     const AbeCiphertext& ct, const AbeSecretKey& sk,
                                     size_t& leaf_cursor) {
  const auto& node = tree.node(node_idx);
  if (node.is_leaf()) {
    size_t idx = leaf_cursor++;
    const auto& [box_attr, box] = ct.leaf_boxes[idx];
    if (box_attr != node.attribute) {
      throw Error(ErrorCode::MalformedCiphertext, "leaf box attribute mismatch");
    }
    auto it = sk.attr_keys.find(node.attribute);
    if (it == sk.attr_keys.end()) return std::nullopt;
    auto mask = leaf_mask(it->second, ct.nonce, static_cast<uint32_t>(idx));
    return field::Fp::from_bytes_le(xor32(box, mask));
  }

  std::vector<std::pair<field::Fp, field::Fp>> live;
  for (size_t i = 0; i < node.children.size(); ++i) {
    auto value = recover_rec(tree, node.children[i], ct, sk, leaf_cursor);
    if (value && live.size() < node.threshold) {
      live.emplace_back(field::Fp(static_cast<uint64_t>(i + 1)), *value);
    }
  }
  if (live.size() < node.threshold) return std::nullopt;
  return field::lagrange_at_zero(live);
}

}  // namespace

size_t AccessTree::add_leaf(const std::string& attribute) {
  if (attribute.empty()) throw Error(ErrorCode::SyntaxError, "empty attribute");
  nodes_.push_back(Node{0, attribute, {}});
  root_ = nodes_.size() - 1;
  return root_;
}

size_t AccessTree::add_gate(uint32_t threshold, const std::vector<size_t>& children) {
  if (children.empty()) throw Error(ErrorCode::SyntaxError, "gate without children");
  if (threshold < 1 || threshold > children.size()) {
    throw Error(ErrorCode::ThresholdOutOfRange, "threshold out of range");
  }
  std::set<std::string> sibling_attrs;
  for (size_t c : children) {
    const auto& child = nodes_.at(c);
    if (child.is_leaf() && !sibling_attrs.insert(child.attribute).second) {
      throw Error(ErrorCode::SyntaxError,
                  "duplicate attribute '" + child.attribute + "' among siblings");
    }
  }
  nodes_.push_back(Node{threshold, "", children});
  root_ = nodes_.size() - 1;
  return root_;
}

size_t AccessTree::leaf_count() const {
  size_t n = 0;
  for (const auto& node : nodes_) {
    if (node.is_leaf()) ++n;
  }
  return n;
}

AccessTree parse_policy(std::string_view text) {
  AccessTree tree;
  PolicyParser parser{text};
  size_t root = parser.parse_or(tree);
  parser.skip_ws();
  if (parser.pos != text.size()) {
    throw Error(ErrorCode::SyntaxError,
                "unexpected input at offset " + std::to_string(parser.pos));
  }
  tree.set_root(root);
  return tree;
}

namespace {

void render_rec(const AccessTree& tree, size_t node_idx, std::string& out) {
  const auto& node = tree.node(node_idx);
  if (node.is_leaf()) {
    out += node.attribute;
    return;
  }
  size_t n = node.children.size();
  if (n == 2 && (node.threshold == 1 || node.threshold == 2)) {
    out += '(';
    render_rec(tree, node.children[0], out);
    out += node.threshold == 2 ? " AND " : " OR ";
    render_rec(tree, node.children[1], out);
    out += ')';
    return;
  }
  out += "THRESHOLD(" + std::to_string(node.threshold);
  for (size_t c : node.children) {
    out += ", ";
    render_rec(tree, c, out);
  }
  out += ')';
}

}  // namespace

std::string render_policy(const AccessTree& tree) {
  std::string out;
  render_rec(tree, tree.root(), out);
  return out;
}

namespace {

bool satisfies_rec(const AccessTree& tree, size_t node_idx,
                   const std::set<std::string>& attributes) {
  const auto& node = tree.node(node_idx);
  if (node.is_leaf()) return attributes.count(node.attribute) != 0;
  uint32_t live = 0;
  for (size_t c : node.children) {
    if (satisfies_rec(tree, c, attributes)) ++live;
  }
  return live >= node.threshold;
}

}  // namespace

bool satisfies(const AccessTree& tree, const std::set<std::string>& attributes) {
  return satisfies_rec(tree, tree.root(), attributes);
}

std::vector<std::pair<std::string, field::Fp>> share_secret(const field::Fp& secret,
                                                            const AccessTree& tree,
                                                            Rng& rng) {
  std::vector<std::pair<std::string, field::Fp>> out;
  out.reserve(tree.leaf_count());
  share_rec(tree, tree.root(), secret, rng, out);
  return out;
}

std::pair<AbePublicKey, AbeMasterKey> setup(std::optional<uint64_t> seed) {
  Rng rng(seed ? *seed : system_entropy());
  AbePublicKey pk;
  auto id_bytes = rng.bytes(16);
  std::copy(id_bytes.begin(), id_bytes.end(), pk.system_id.begin());
  AbeMasterKey mk;
  auto secret_bytes = rng.bytes(32);
  std::copy(secret_bytes.begin(), secret_bytes.end(), mk.master_secret.begin());
  return {pk, mk};
}

AbeSecretKey keygen(const AbePublicKey& /*pk*/, const AbeMasterKey& mk,
                    const std::string& user_id, const std::set<std::string>& attributes) {
  if (attributes.empty()) {
    throw Error(ErrorCode::EmptyAttributeSet, "user needs at least one attribute");
  }
  AbeSecretKey sk;
  sk.user_id = user_id;
  for (const auto& attr : attributes) {
    if (attr.empty()) throw Error(ErrorCode::EmptyAttributeSet, "empty attribute name");
    sk.attr_keys.emplace(attr, derive_attr_key(mk, attr));
  }
  return sk;
}

AbeCiphertext encrypt(const AbePublicKey& /*pk*/, const AbeMasterKey& provider,
                      const std::vector<uint8_t>& payload, const AccessTree& policy,
                      std::optional<uint64_t> seed) {
  if (payload.empty()) throw Error(ErrorCode::EmptyInput, "empty payload");
  Rng rng(seed ? *seed : system_entropy());

  AbeCiphertext ct;
  ct.policy_text = render_policy(policy);
  auto nonce_bytes = rng.bytes(16);
  std::copy(nonce_bytes.begin(), nonce_bytes.end(), ct.nonce.begin());

  field::Fp session = field::Fp::random(rng);
  auto shares = share_secret(session, policy, rng);
  ct.leaf_boxes.reserve(shares.size());
  for (size_t idx = 0; idx < shares.size(); ++idx) {
    const auto& [attr, share] = shares[idx];
    auto mask = leaf_mask(derive_attr_key(provider, attr), ct.nonce,
                          static_cast<uint32_t>(idx));
    ct.leaf_boxes.emplace_back(attr, xor32(share.to_bytes_le(), mask));
  }

  ct.payload_ct = payload;
  keystream_xor(payload_key(session, ct.nonce), ct.payload_ct);
  ct.auth_tag = compute_tag(mac_key_of(session), ct.policy_text, ct.payload_ct);
  return ct;
}

std::vector<uint8_t> decrypt(const AbeCiphertext& ct, const AbeSecretKey& sk) {
  AccessTree tree;
  try {
    tree = parse_policy(ct.policy_text);
  } catch (const Error&) {
    throw Error(ErrorCode::MalformedCiphertext, "unparseable policy in ciphertext");
  }
  if (tree.leaf_count() != ct.leaf_boxes.size()) {
    throw Error(ErrorCode::MalformedCiphertext, "leaf box count does not match policy");
  }

  size_t leaf_cursor = 0;
  auto session = recover_rec(tree, tree.root(), ct, sk, leaf_cursor);
  if (!session) {
    throw Error(ErrorCode::AccessDenied, "attributes do not satisfy the policy");
  }

  auto expected_tag = compute_tag(mac_key_of(*session), ct.policy_text, ct.payload_ct);
  if (expected_tag != ct.auth_tag) {
    throw Error(ErrorCode::AuthenticationFailure, "envelope tag mismatch");
  }

  std::vector<uint8_t> payload = ct.payload_ct;
  keystream_xor(payload_key(*session, ct.nonce), payload);
  return payload;
}

std::vector<uint8_t> serialize_ciphertext(const AbeCiphertext& ct) {
  std::vector<uint8_t> out = {'A', 'B', 'E', '1'};
  append_section(out, ct.policy_text);
  append_section(out, ct.nonce.data(), ct.nonce.size());

  std::vector<uint8_t> boxes;
  append_u32_be(boxes, static_cast<uint32_t>(ct.leaf_boxes.size()));
  for (const auto& [attr, box] : ct.leaf_boxes) {
    append_section(boxes, attr);
    boxes.insert(boxes.end(), box.begin(), box.end());
  }
  append_section(out, boxes.data(), boxes.size());

  append_section(out, ct.payload_ct.data(), ct.payload_ct.size());
  append_section(out, ct.auth_tag.data(), ct.auth_tag.size());
  return out;
}

AbeCiphertext parse_ciphertext(const std::vector<uint8_t>& bytes) {
  ByteReader reader{bytes};
  reader.expect_magic("ABE1");
  AbeCiphertext ct;

  auto policy = reader.section();
  ct.policy_text.assign(policy.begin(), policy.end());

  auto nonce = reader.section();
  if (nonce.size() != 16) throw Error(ErrorCode::MalformedCiphertext, "bad nonce length");
  std::copy(nonce.begin(), nonce.end(), ct.nonce.begin());

  auto boxes = reader.section();
  ByteReader box_reader{boxes};
  uint32_t count = box_reader.u32_be();
  for (uint32_t i = 0; i < count; ++i) {
    auto attr = box_reader.section();
    auto share = box_reader.take(32);
    std::array<uint8_t, 32> share_arr;
    std::copy(share.begin(), share.end(), share_arr.begin());
    ct.leaf_boxes.emplace_back(std::string(attr.begin(), attr.end()), share_arr);
  }
  box_reader.expect_end();

  ct.payload_ct = reader.section();

  auto tag = reader.section();
  if (tag.size() != 32) throw Error(ErrorCode::MalformedCiphertext, "bad tag length");
  std::copy(tag.begin(), tag.end(), ct.auth_tag.begin());

  reader.expect_end();
  return ct;
}

std::vector<uint8_t> serialize_public_key(const AbePublicKey& pk) {
  std::vector<uint8_t> out = {'A', 'B', 'K', '1'};
  append_section(out, "pk");
  append_section(out, pk.system_id.data(), pk.system_id.size());
  append_section(out, pk.prime_id);
  return out;
}

AbePublicKey parse_public_key(const std::vector<uint8_t>& bytes) {
  ByteReader reader{bytes};
  reader.expect_magic("ABK1");
  auto kind = reader.section();
  if (std::string(kind.begin(), kind.end()) != "pk") {
    throw Error(ErrorCode::MalformedCiphertext, "not a public key file");
  }
  AbePublicKey pk;
  auto id = reader.section();
  if (id.size() != 16) throw Error(ErrorCode::MalformedCiphertext, "bad system id");
  std::copy(id.begin(), id.end(), pk.system_id.begin());
  auto prime = reader.section();
  pk.prime_id.assign(prime.begin(), prime.end());
  reader.expect_end();
  return pk;
}

std::vector<uint8_t> serialize_master_key(const AbeMasterKey& mk) {
  std::vector<uint8_t> out = {'A', 'B', 'K', '1'};
  append_section(out, "mk");
  append_section(out, mk.master_secret.data(), mk.master_secret.size());
  return out;
}

AbeMasterKey parse_master_key(const std::vector<uint8_t>& bytes) {
  ByteReader reader{bytes};
  reader.expect_magic("ABK1");
  auto kind = reader.section();
  if (std::string(kind.begin(), kind.end()) != "mk") {
    throw Error(ErrorCode::MalformedCiphertext, "not a master key file");
  }
  AbeMasterKey mk;
  auto secret = reader.section();
  if (secret.size() != 32) throw Error(ErrorCode::MalformedCiphertext, "bad master secret");
  std::copy(secret.begin(), secret.end(), mk.master_secret.begin());
  reader.expect_end();
  return mk;
}

std::vector<uint8_t> serialize_secret_key(const AbeSecretKey& sk) {
  std::vector<uint8_t> out = {'A', 'B', 'K', '1'};
  append_section(out, "sk");
  append_section(out, sk.user_id);
  std::vector<uint8_t> attrs;
  append_u32_be(attrs, static_cast<uint32_t>(sk.attr_keys.size()));
  for (const auto& [attr, key] : sk.attr_keys) {
    append_section(attrs, attr);
    attrs.insert(attrs.end(), key.begin(), key.end());
  }
  append_section(out, attrs.data(), attrs.size());
  return out;
}

AbeSecretKey parse_secret_key(const std::vector<uint8_t>& bytes) {
  ByteReader reader{bytes};
  reader.expect_magic("ABK1");
  auto kind = reader.section();
  if (std::string(kind.begin(), kind.end()) != "sk") {
    throw Error(ErrorCode::MalformedCiphertext, "not a secret key file");
  }
  AbeSecretKey sk;
  auto user = reader.section();
  sk.user_id.assign(user.begin(), user.end());
  auto attrs = reader.section();
  ByteReader attr_reader{attrs};
  uint32_t count = attr_reader.u32_be();
  for (uint32_t i = 0; i < count; ++i) {
    auto name = attr_reader.section();
    auto key = attr_reader.take(32);
    std::array<uint8_t, 32> key_arr;
    std::copy(key.begin(), key.end(), key_arr.begin());
    sk.attr_keys.emplace(std::string(name.begin(), name.end()), key_arr);
  }
  attr_reader.expect_end();
  reader.expect_end();
  return sk;
}

}  // namespace cipherner::abe
