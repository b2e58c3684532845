// Exact integer and rational helpers shared by every module.
//
// Real numbers never enter a certification path as floating point: they are
// either exact rationals or an Enclosure of two rationals (see series.hpp).
#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace waring_gaps {

using BigInt = mpz_class;
using Rational = mpq_class;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A fixed-width counter would have wrapped.
class OverflowError : public Error {
 public:
  using Error::Error;
};

/// Canonical rational num/den. Throws on a zero denominator.
Rational make_rational(const BigInt& num, const BigInt& den);
Rational make_rational(long num, long den = 1);

/// "p/q" in lowest terms; integers render as "p/1".
std::string to_string(const Rational& r);
std::string to_string(const BigInt& n);

/// Accepts "p/q" or "p" (optionally signed). Throws Error on malformed input.
Rational parse_rational(std::string_view text);
BigInt parse_bigint(std::string_view text);

BigInt pow(const BigInt& base, unsigned long exponent);
Rational pow(const Rational& base, unsigned long exponent);

/// q^{-k} exactly.
Rational reciprocal_power(unsigned long q, unsigned long k);

/// Decides u < c * b^{p/q} exactly by comparing u^q with c^q * b^p.
/// Requires u >= 0, c > 0, b >= 0, q >= 1.
bool less_than_scaled_power(const BigInt& u, const BigInt& c, const BigInt& b,
                            unsigned long p, unsigned long q);

/// floor(b^{p/q}) for b >= 0, q >= 1.
BigInt floor_power(const BigInt& b, unsigned long p, unsigned long q);

/// x^e in 64 bits, or nullopt if it does not fit.
std::optional<std::uint64_t> checked_pow(std::uint64_t x, unsigned e);

/// Largest x with x^ell <= b, verified by exact multiplication.
std::uint64_t floor_root(unsigned ell, std::uint64_t b);

/// Largest x with x^ell <= b for arbitrary-size b.
BigInt floor_root(unsigned long ell, const BigInt& b);

inline std::uint64_t to_u64(const BigInt& n) {
  if (n < 0 || mpz_sizeinbase(n.get_mpz_t(), 2) > 64)
    throw OverflowError("value " + n.get_str() + " does not fit in 64 bits");
  std::uint64_t out = 0;
  mpz_export(&out, nullptr, -1, sizeof(out), 0, 0, n.get_mpz_t());
  return out;
}

inline BigInt from_u64(std::uint64_t v) {
  BigInt out;
  mpz_import(out.get_mpz_t(), 1, -1, sizeof(v), 0, 0, &v);
  return out;
}

inline Rational abs(const Rational& r) { return r < 0 ? Rational(-r) : r; }

}  // namespace waring_gaps
