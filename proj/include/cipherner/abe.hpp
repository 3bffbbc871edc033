#ifndef CIPHERNER_ABE_HPP
#define CIPHERNER_ABE_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cipherner/field.hpp"
#include "cipherner/rng.hpp"

namespace cipherner::abe {

// Threshold-gate policy tree. Internal nodes are t-of-n gates (AND = n-of-n,
// OR = 1-of-n); leaves name attributes.
class AccessTree {
 public:
  struct Node {
    uint32_t threshold = 0;             // 0 for leaves
    std::string attribute;              // leaves only
    std::vector<size_t> children;       // indices into nodes()

    bool is_leaf() const { return children.empty(); }
  };

  size_t add_leaf(const std::string& attribute);
  size_t add_gate(uint32_t threshold, const std::vector<size_t>& children);
  void set_root(size_t index) { root_ = index; }

  const Node& node(size_t index) const { return nodes_[index]; }
  size_t root() const { return root_; }
  size_t node_count() const { return nodes_.size(); }
  size_t leaf_count() const;

 private:
  std::vector<Node> nodes_;
  size_t root_ = 0;
};

// Grammar: expr := attr | (expr AND expr) | (expr OR expr)
//                | THRESHOLD(t, expr, expr, ...)
// Attributes match [A-Za-z0-9_.:-]+. AND/OR chains left-associate.
AccessTree parse_policy(std::string_view text);

// Canonical form: fully parenthesized infix, THRESHOLD for general gates.
std::string render_policy(const AccessTree& tree);

bool satisfies(const AccessTree& tree, const std::set<std::string>& attributes);

// Splits `secret` down the tree: each gate draws a random degree-(t-1)
// polynomial q with q(0) = its secret and hands q(i) to child i (1-based).
// Returns (attribute, share) per leaf in depth-first order.
std::vector<std::pair<std::string, field::Fp>> share_secret(const field::Fp& secret,
                                                            const AccessTree& tree,
                                                            Rng& rng);

struct AbePublicKey {
  std::array<uint8_t, 16> system_id{};
  std::string prime_id = "2^255-19";
};

struct AbeMasterKey {
  std::array<uint8_t, 32> master_secret{};
};

struct AbeSecretKey {
  std::string user_id;
  // attribute -> 32-byte key; the attribute set is the key set.
  std::map<std::string, std::array<uint8_t, 32>> attr_keys;

  std::set<std::string> attributes() const {
    std::set<std::string> out;
    for (const auto& [a, _] : attr_keys) out.insert(a);
    return out;
  }
};

struct AbeCiphertext {
  std::string policy_text;                 // canonical policy, in the clear
  std::array<uint8_t, 16> nonce{};
  // (attribute, masked share) per leaf, depth-first order.
  std::vector<std::pair<std::string, std::array<uint8_t, 32>>> leaf_boxes;
  std::vector<uint8_t> payload_ct;
  std::array<uint8_t, 32> auth_tag{};
};

// With a seed the output is fully deterministic (test mode); without one the
// system RNG is used.
std::pair<AbePublicKey, AbeMasterKey> setup(std::optional<uint64_t> seed = {});

AbeSecretKey keygen(const AbePublicKey& pk, const AbeMasterKey& mk,
                    const std::string& user_id, const std::set<std::string>& attributes);

// The encryptor is the data provider, who holds the master key and therefore
// the per-attribute key derivation (see keygen).
AbeCiphertext encrypt(const AbePublicKey& pk, const AbeMasterKey& provider,
                      const std::vector<uint8_t>& payload, const AccessTree& policy,
                      std::optional<uint64_t> seed = {});

// Succeeds exactly when sk's attributes satisfy the policy; AccessDenied
// otherwise, AuthenticationFailure if the envelope fails its tag check.
std::vector<uint8_t> decrypt(const AbeCiphertext& ct, const AbeSecretKey& sk);

// Container formats. AbeCiphertext: magic `ABE1`, then big-endian u32
// length-prefixed sections policy / nonce / leaf-box array / payload / tag.
// Keys: magic `ABK1` with a kind section ("pk" | "mk" | "sk") first.
std::vector<uint8_t> serialize_ciphertext(const AbeCiphertext& ct);
AbeCiphertext parse_ciphertext(const std::vector<uint8_t>& bytes);

std::vector<uint8_t> serialize_public_key(const AbePublicKey& pk);
AbePublicKey parse_public_key(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> serialize_master_key(const AbeMasterKey& mk);
AbeMasterKey parse_master_key(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> serialize_secret_key(const AbeSecretKey& sk);
AbeSecretKey parse_secret_key(const std::vector<uint8_t>& bytes);

}  // namespace cipherner::abe

#endif  // CIPHERNER_ABE_HPP
