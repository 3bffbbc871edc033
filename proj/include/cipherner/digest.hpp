#ifndef CIPHERNER_DIGEST_HPP
#define CIPHERNER_DIGEST_HPP

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cipherner::digest {

// RFC 1321 message digest, streaming.
class Md5 {
 public:
  Md5() { reset(); }

  void reset();
  void update(const void* data, size_t len);
  std::array<uint8_t, 16> finish();

  static std::array<uint8_t, 16> of(std::string_view data) {
    Md5 h;
    h.update(data.data(), data.size());
    return h.finish();
  }

 private:
  void transform(const uint8_t block[64]);

  uint32_t state_[4];
  uint64_t total_bytes_;
  uint8_t buffer_[64];
  size_t buffered_;
};

// FIPS 180-4 SHA-256, streaming.
class Sha256 {
 public:
  Sha256() { reset(); }

  void reset();
  void update(const void* data, size_t len);
  std::array<uint8_t, 32> finish();

  static std::array<uint8_t, 32> of(std::string_view data) {
    Sha256 h;
    h.update(data.data(), data.size());
    return h.finish();
  }
  static std::array<uint8_t, 32> of(const std::vector<uint8_t>& data) {
    Sha256 h;
    h.update(data.data(), data.size());
    return h.finish();
  }

 private:
  void transform(const uint8_t block[64]);

  uint32_t state_[8];
  uint64_t total_bytes_;
  uint8_t buffer_[64];
  size_t buffered_;
};

template <size_t N>
std::string to_hex(const std::array<uint8_t, N>& bytes) {
  static const char* kDigits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * N);
  for (uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0F]);
  }
  return out;
}

std::string md5_hex(std::string_view data);
std::string sha256_hex(std::string_view data);

// Standard alphabet (A-Za-z0-9+/) with '=' padding.
std::string base64_encode(const uint8_t* data, size_t len);
std::string base64_encode(std::string_view data);

}  // namespace cipherner::digest

#endif  // CIPHERNER_DIGEST_HPP
