#include "cipherner/field.hpp"

#include "cipherner/error.hpp"

namespace cipherner::field {

const uint512& prime() {
  static const uint512 p = (uint512(1) << 255) - 19;
  return p;
}

Fp Fp::from_bytes_le(const std::array<uint8_t, 32>& bytes) {
  uint512 v = 0;
  for (size_t i = 32; i-- > 0;) {
    v <<= 8;
    v |= bytes[i];
  }
  return Fp(v);
}

std::array<uint8_t, 32> Fp::to_bytes_le() const {
  std::array<uint8_t, 32> out{};
  uint512 v = value_;
  for (size_t i = 0; i < 32; ++i) {
    out[i] = static_cast<uint8_t>(v & 0xFF);
    v >>= 8;
  }
  return out;
}

Fp Fp::random(Rng& rng) {
  for (;;) {
    uint512 v = 0;
    for (int i = 0; i < 4; ++i) {
      v <<= 64;
      v |= rng.next();
    }
    v >>= 1;  // 255 bits
    if (v < prime()) {
      Fp out;
      out.value_ = v;
      return out;
    }
  }
}

Fp Fp::operator+(const Fp& o) const {
  uint512 v = value_ + o.value_;
  if (v >= prime()) v -= prime();
  Fp out;
  out.value_ = v;
  return out;
}

Fp Fp::operator-(const Fp& o) const {
  Fp out;
  out.value_ = (value_ >= o.value_) ? value_ - o.value_ : prime() - (o.value_ - value_);
  return out;
}

Fp Fp::operator*(const Fp& o) const {
  Fp out;
  out.value_ = (value_ * o.value_) % prime();
  return out;
}

Fp Fp::pow(const uint512& e) const {
  Fp base = *this;
  Fp result(1);
  uint512 exp = e;
  while (exp != 0) {
    if ((exp & 1) != 0) result = result * base;
    base = base * base;
    exp >>= 1;
  }
  return result;
}

Fp Fp::inverse() const {
  if (is_zero()) throw Error(ErrorCode::ConfigInvalid, "inverse of zero");
  return pow(prime() - 2);
}

Fp poly_eval(const std::vector<Fp>& coeffs, const Fp& x) {
  Fp acc;
  for (size_t i = coeffs.size(); i-- > 0;) {
    acc = acc * x + coeffs[i];
  }
  return acc;
}

Fp lagrange_at_zero(const std::vector<std::pair<Fp, Fp>>& points) {
  size_t n = points.size();
  if (n == 0) throw Error(ErrorCode::ConfigInvalid, "no interpolation points");
  for (size_t i = 0; i < n; ++i) {
    if (points[i].first.is_zero()) {
      throw Error(ErrorCode::DuplicateX, "interpolation point at zero");
    }
    for (size_t j = i + 1; j < n; ++j) {
      if (points[i].first == points[j].first) {
        throw Error(ErrorCode::DuplicateX, "duplicate interpolation x value");
      }
    }
  }

  // denoms[i] = prod_{j != i} (x_j - x_i); inverted with one Fermat
  // exponentiation via the product trick.
  std::vector<Fp> denoms(n, Fp(1));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (j != i) denoms[i] = denoms[i] * (points[j].first - points[i].first);
    }
  }
  std::vector<Fp> prefix(n + 1, Fp(1));
  for (size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] * denoms[i];
  Fp inv_all = prefix[n].inverse();
  std::vector<Fp> inv_denoms(n);
  for (size_t i = n; i-- > 0;) {
    inv_denoms[i] = inv_all * prefix[i];
    inv_all = inv_all * denoms[i];
  }

  Fp result;
  for (size_t i = 0; i < n; ++i) {
    Fp numer(1);
    for (size_t j = 0; j < n; ++j) {
      if (j != i) numer = numer * points[j].first;
    }
    result = result + points[i].second * numer * inv_denoms[i];
  }
  return result;
}

}  // namespace cipherner::field
