// Independent brute-force reference implementations used by the tests.
// Each one counts or sums directly from the definitions, sharing no code
// with the library beyond the BigInt/Rational types.
#pragma once

#include "waring_gaps/exact.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

namespace oracle {

using waring_gaps::BigInt;
using waring_gaps::Rational;

inline std::uint64_t ipow(std::uint64_t x, unsigned e) {
  std::uint64_t r = 1;
  while (e--) r *= x;
  return r;
}

/// r_{ell,s}(n) for n <= N by an s-fold nested loop over x^ell <= N.
inline std::vector<std::uint64_t> rep_counts(unsigned ell, unsigned s, std::uint64_t N) {
  std::vector<std::uint64_t> powers;
  for (std::uint64_t x = 0; ipow(x, ell) <= N; ++x) powers.push_back(ipow(x, ell));
  std::vector<std::uint64_t> out(N + 1, 0);
  std::function<void(unsigned, std::uint64_t)> loop = [&](unsigned depth, std::uint64_t sum) {
    if (depth == s) {
      ++out[sum];
      return;
    }
    for (auto p : powers) {
      if (sum + p > N) break;
      loop(depth + 1, sum + p);
    }
  };
  loop(0, 0);
  return out;
}

/// r_{ell,ell}(m, M) by enumerating (Z/MZ)^ell.
inline std::vector<std::uint64_t> residue_counts(unsigned ell, std::uint64_t M) {
  std::vector<std::uint64_t> out(M, 0);
  std::vector<std::uint64_t> x(ell, 0);
  while (true) {
    std::uint64_t sum = 0;
    for (auto v : x) {
      std::uint64_t p = 1;
      for (unsigned e = 0; e < ell; ++e) p = p * v % M;
      sum = (sum + p) % M;
    }
    ++out[sum];
    unsigned i = 0;
    while (i < ell && ++x[i] == M) x[i++] = 0;
    if (i == ell) break;
  }
  return out;
}

/// Largest x with x^ell <= b, by bisection on exact powers.
inline BigInt floor_root(unsigned long ell, const BigInt& b) {
  BigInt lo = 0, hi = b + 1;  // invariant lo^ell <= b < hi^ell
  while (hi - lo > 1) {
    BigInt mid = (lo + hi) / 2;
    if (waring_gaps::pow(mid, ell) <= b) lo = mid;
    else hi = mid;
  }
  return lo;
}

struct Run {
  std::uint64_t start, length;
  bool truncated;
};

/// Maximal zero runs of length >= min_len.
inline std::vector<Run> zero_runs(const std::vector<std::uint64_t>& c, std::uint64_t min_len) {
  std::vector<Run> out;
  std::uint64_t n = 0;
  while (n < c.size()) {
    if (c[n] != 0) {
      ++n;
      continue;
    }
    std::uint64_t e = n;
    while (e < c.size() && c[e] == 0) ++e;
    if (e - n >= min_len) out.push_back({n, e - n, e == c.size()});
    n = e;
  }
  return out;
}

/// a in [1, N] with counts zero on every integer of (a - a^{p/q}, a].
inline std::vector<std::uint64_t> exceptional(const std::vector<std::uint64_t>& counts,
                                              std::uint64_t N, unsigned long p,
                                              unsigned long q) {
  std::vector<std::uint64_t> out;
  std::vector<BigInt> dq;
  for (std::uint64_t a = 1; a <= N; ++a) {
    const BigInt ap = waring_gaps::pow(BigInt(static_cast<unsigned long>(a)), p);
    bool member = true;
    // n = a - d lies in the interval iff d < a^{p/q}, i.e. d^q < a^p.
    for (std::uint64_t d = 0; d <= a; ++d) {
      if (d == dq.size()) dq.push_back(waring_gaps::pow(BigInt(static_cast<unsigned long>(d)), q));
      if (dq[d] >= ap) break;
      if (counts[a - d] != 0) {
        member = false;
        break;
      }
    }
    if (member) out.push_back(a);
  }
  return out;
}

/// sum_{i >= 0} |a_{start+i}| 2^{-i} for a finitely supported sequence.
inline Rational tail(const std::map<std::uint64_t, BigInt>& a, std::uint64_t start) {
  Rational sum = 0;
  for (const auto& [n, v] : a) {
    if (n < start) continue;
    sum += Rational(abs(v)) / Rational(BigInt(1) << static_cast<mp_bitcnt_t>(n - start));
  }
  sum.canonicalize();
  return sum;
}

/// sum_{k < terms} a_k q^{-k} for a finitely supported sequence.
inline Rational truncated(const std::map<std::uint64_t, BigInt>& a, unsigned long q,
                          std::uint64_t terms) {
  Rational sum = 0;
  for (const auto& [n, v] : a)
    if (n < terms) sum += Rational(v) / Rational(waring_gaps::pow(BigInt(q), n));
  sum.canonicalize();
  return sum;
}

/// Largest x with x^ell <= b by linear scan (small b only).
inline std::uint64_t best_power_base(unsigned ell, std::uint64_t b) {
  std::uint64_t x = 0;
  while (ipow(x + 1, ell) <= b) ++x;
  return x;
}

}  // namespace oracle
