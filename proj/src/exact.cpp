#include "waring_gaps/exact.hpp"

#include <cmath>

namespace waring_gaps {

Rational make_rational(const BigInt& num, const BigInt& den) {
  if (den == 0) throw Error("rational with zero denominator");
  Rational r(num, den);
  r.canonicalize();
  return r;
}

Rational make_rational(long num, long den) {
  return make_rational(BigInt(num), BigInt(den));
}

std::string to_string(const Rational& r) {
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

std::string to_string(const BigInt& n) { return n.get_str(); }

BigInt parse_bigint(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw Error("empty integer");
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) throw Error("malformed integer '" + s + "'");
  for (std::size_t j = i; j < s.size(); ++j)
    if (s[j] < '0' || s[j] > '9') throw Error("malformed integer '" + s + "'");
  if (s[0] == '+') s.erase(0, 1);
  return BigInt(s, 10);
}

Rational parse_rational(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) return Rational(parse_bigint(text));
  BigInt num = parse_bigint(text.substr(0, slash));
  std::string_view den_text = text.substr(slash + 1);
  if (!den_text.empty() && (den_text[0] == '-' || den_text[0] == '+'))
    throw Error("malformed rational '" + std::string(text) + "'");
  return make_rational(num, parse_bigint(den_text));
}

BigInt pow(const BigInt& base, unsigned long exponent) {
  BigInt out;
  mpz_pow_ui(out.get_mpz_t(), base.get_mpz_t(), exponent);
  return out;
}

Rational pow(const Rational& base, unsigned long exponent) {
  return make_rational(pow(base.get_num(), exponent),
                       pow(base.get_den(), exponent));
}

Rational reciprocal_power(unsigned long q, unsigned long k) {
  return make_rational(BigInt(1), pow(BigInt(q), k));
}

bool less_than_scaled_power(const BigInt& u, const BigInt& c, const BigInt& b,
                            unsigned long p, unsigned long q) {
  if (q == 0) throw Error("root index must be positive");
  if (u < 0 || c <= 0 || b < 0)
    throw Error("less_than_scaled_power needs u >= 0, c > 0, b >= 0");
  return pow(u, q) < pow(c, q) * pow(b, p);
}

BigInt floor_power(const BigInt& b, unsigned long p, unsigned long q) {
  if (q == 0) throw Error("root index must be positive");
  if (b < 0) throw Error("floor_power needs b >= 0");
  return floor_root(q, pow(b, p));
}

std::optional<std::uint64_t> checked_pow(std::uint64_t x, unsigned e) {
  std::uint64_t out = 1;
  for (unsigned i = 0; i < e; ++i)
    if (__builtin_mul_overflow(out, x, &out)) return std::nullopt;
  return out;
}

std::uint64_t floor_root(unsigned ell, std::uint64_t b) {
  if (ell == 0) throw Error("floor_root needs ell >= 1");
  if (ell == 1 || b < 2) return b;
  // The floating guess is only a starting point; both sides are re-checked.
  auto x = static_cast<std::uint64_t>(
      std::pow(static_cast<long double>(b), 1.0L / ell));
  auto fits = [&](std::uint64_t v) {
    auto p = checked_pow(v, ell);
    return p && *p <= b;
  };
  while (x > 0 && !fits(x)) --x;
  while (fits(x + 1)) ++x;
  return x;
}

BigInt floor_root(unsigned long ell, const BigInt& b) {
  if (ell == 0) throw Error("floor_root needs ell >= 1");
  if (b < 0) throw Error("floor_root needs b >= 0");
  BigInt out;
  mpz_root(out.get_mpz_t(), b.get_mpz_t(), ell);
  return out;
}

}  // namespace waring_gaps
