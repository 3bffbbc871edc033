#ifndef CIPHERNER_FIELD_HPP
#define CIPHERNER_FIELD_HPP

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "cipherner/rng.hpp"

namespace cipherner::field {

using uint512 = boost::multiprecision::uint512_t;

// Prime field modulus 2^255 - 19.
const uint512& prime();

// Element of GF(2^255 - 19), always kept reduced.
class Fp {
 public:
  Fp() : value_(0) {}
  explicit Fp(uint64_t v) : value_(v) {}
  explicit Fp(const uint512& v) : value_(v % prime()) {}

  static Fp from_bytes_le(const std::array<uint8_t, 32>& bytes);
  std::array<uint8_t, 32> to_bytes_le() const;

  // Uniform element below the prime (rejection sampling on 255-bit draws).
  static Fp random(Rng& rng);

  Fp operator+(const Fp& o) const;
  Fp operator-(const Fp& o) const;
  Fp operator*(const Fp& o) const;
  Fp pow(const uint512& e) const;
  // Multiplicative inverse by Fermat exponentiation; value must be nonzero.
  Fp inverse() const;

  bool is_zero() const { return value_ == 0; }
  bool operator==(const Fp& o) const = default;

  const uint512& raw() const { return value_; }

 private:
  uint512 value_;
};

// Evaluates sum_i coeffs[i] * x^i.
Fp poly_eval(const std::vector<Fp>& coeffs, const Fp& x);

// Lagrange interpolation at zero: sum_i y_i * prod_{j != i} x_j / (x_j - x_i).
// x values must be distinct and nonzero (DuplicateX otherwise). Uses a single
// batched inversion.
Fp lagrange_at_zero(const std::vector<std::pair<Fp, Fp>>& points);

}  // namespace cipherner::field

#endif  // CIPHERNER_FIELD_HPP
