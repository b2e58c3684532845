// Counting solutions of x_1^ell + ... + x_ell^ell = m over Z/MZ.
#pragma once

#include "waring_gaps/exact.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace waring_gaps {

/// counts[v] = #{x in Z/MZ : x^ell = v}.
struct PowerHistogram {
  unsigned ell = 0;
  std::uint64_t modulus = 1;
  std::vector<std::uint64_t> counts;
};

PowerHistogram power_histogram(unsigned ell, std::uint64_t modulus);

/// r[m] = r_{ell,ell}(m, M) for m in [0, M).
struct ResidueProfile {
  unsigned ell = 0;
  std::uint64_t modulus = 1;
  std::vector<BigInt> r;

  /// r_{ell,ell}(m, M) for any integer m.
  const BigInt& at(std::int64_t m) const;
  BigInt mass() const;

  friend bool operator==(const ResidueProfile&, const ResidueProfile&) = default;
};

/// ell-1 cyclic convolutions of the power histogram with itself.
ResidueProfile residue_counts(unsigned ell, std::uint64_t modulus);

/// Profile modulo M1*M2 from coprime factors. Throws on gcd(M1,M2) > 1.
ResidueProfile crt_combine(const ResidueProfile& p1, const ResidueProfile& p2);

struct ModulusSearchOptions {
  /// Products of pairwise coprime pool elements up to this bound are also
  /// tried; 0 restricts the search to the pool itself.
  std::uint64_t product_bound = 0;
  /// Only starts m with 2m < M (the gap lemma's max{2m, 4K1} < M).
  bool require_small_start = false;
  /// Only even moduli.
  bool require_even = false;
  /// Only starts with m + reserve < M (room for a longer trailing window).
  std::uint64_t reserve = 0;
};

struct ModulusCandidate {
  unsigned ell = 0;
  std::uint64_t modulus = 0;
  std::uint64_t start = 0;  // m
  std::uint64_t window = 0;  // K1
  std::vector<Rational> per_k_quality;  // r(m+k, M) / M^{ell-1}
  Rational window_quality;  // max over the window
  Rational global_quality;  // max over all residues
  bool meets_iii = false;   // window_quality <= 1/(2 K1)
};

/// Candidate moduli in the order the search visits them: nondecreasing,
/// duplicates removed.
std::vector<std::uint64_t> candidate_moduli(const std::vector<std::uint64_t>& pool,
                                            const ModulusSearchOptions& options);

/// Minimizes the window quality over candidates and starts (ties: smaller M,
/// then smaller m). Returns nothing when no candidate meets 1/(2 K1).
std::optional<ModulusCandidate> search_gap_modulus(
    unsigned ell, std::uint64_t window, const std::vector<std::uint64_t>& pool,
    const ModulusSearchOptions& options = {});

/// Evaluates a fixed (M, m) pair against the window.
ModulusCandidate evaluate_modulus(const ResidueProfile& profile,
                                  std::uint64_t start, std::uint64_t window);

void write_csv(const ResidueProfile& profile, std::ostream& out);
nlohmann::json to_json(const ModulusCandidate& candidate);

}  // namespace waring_gaps
