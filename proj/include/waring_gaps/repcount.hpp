// Representation counts r_{ell,s}(n): the number of ordered s-tuples of
// nonnegative integers whose ell-th powers sum to n.
#pragma once

#include "waring_gaps/exact.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace waring_gaps {

struct WaringParams {
  unsigned ell = 3;
  unsigned s = 3;

  /// Validates ell in {3,4} and 1 <= s <= ell.
  static WaringParams make(unsigned ell, unsigned s);

  friend bool operator==(const WaringParams&, const WaringParams&) = default;
};

/// Sieved values counts[n] = r_{ell,s}(n) for 0 <= n <= limit.
///
/// Values are held in 64-bit cells; `byte_width` is the declared storage
/// width used for serialization and is never narrower than the width the
/// loose bound 2^ell (n+1) demands for the whole table.
class RepTable {
 public:
  RepTable(WaringParams params, std::uint64_t limit,
           std::vector<std::uint64_t> counts, unsigned byte_width = 0);

  /// Smallest width in {1,2,4,8} holding 2^ell (limit+1).
  static unsigned required_width(WaringParams params, std::uint64_t limit);

  const WaringParams& params() const { return params_; }
  std::uint64_t limit() const { return limit_; }
  unsigned byte_width() const { return byte_width_; }
  bool covers(std::uint64_t n) const { return n <= limit_; }
  std::uint64_t operator[](std::uint64_t n) const;
  std::span<const std::uint64_t> counts() const { return counts_; }

  friend bool operator==(const RepTable&, const RepTable&) = default;

 private:
  WaringParams params_;
  std::uint64_t limit_;
  unsigned byte_width_;
  std::vector<std::uint64_t> counts_;
};

/// Exact sieve by iterated convolution with the ell-th power indicator.
/// Output is identical for any thread count.
RepTable sieve_rep(WaringParams params, std::uint64_t limit);

struct GreedyDecomposition {
  std::vector<std::uint64_t> parts;  // x_1 >= ... chosen greedily
  std::uint64_t n = 0;               // sum of parts[i]^ell, n <= b
};

/// Subtracts the largest ell-th power ell times in a row.
GreedyDecomposition greedy_decompose(unsigned ell, std::uint64_t b);

/// (b - n)^27 < 25^27 b^8, i.e. b - n < 25 b^{8/27}, decided exactly.
bool greedy_bound_holds(std::uint64_t b, std::uint64_t n);

struct GapRun {
  std::uint64_t start = 0;
  std::uint64_t length = 0;
  bool boundary_truncated = false;  // run reaches the table limit

  friend bool operator==(const GapRun&, const GapRun&) = default;
};

/// Maximal zero runs of length >= min_length, ascending by start.
std::vector<GapRun> find_gap_runs(const RepTable& table,
                                  std::uint64_t min_length);

struct ExceptionalSet {
  std::uint64_t limit = 0;
  Rational exponent;                  // 4059/16384 + epsilon
  std::vector<std::uint64_t> members;  // ascending
  Rational density;                   // #members / limit
};

/// The set of a in [1, limit] such that r_{4,4}(n) = 0 for every integer n
/// in (a - a^{4059/16384 + epsilon}, a].
ExceptionalSet scan_exceptional_set(std::uint64_t limit, const Rational& epsilon,
                                    const RepTable& table);

/// Number of integers d >= 0 with d < a^{p/q} (the window length at a).
std::uint64_t window_length(std::uint64_t a, unsigned long p, unsigned long q);

void write_csv(const RepTable& table, std::ostream& out);

/// "WRT1", ell, s, limit, byte width (u64 little-endian each), then
/// limit+1 counts as little-endian integers of the declared width.
void write_binary(const RepTable& table, std::ostream& out);
RepTable read_binary(std::istream& in);

}  // namespace waring_gaps
