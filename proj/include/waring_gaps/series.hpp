// Integer power series convergent on |z| <= 1/2 ("half-functions"), their
// certified tail norms, mild gap points, and exact evaluation at z = 1/q.
#pragma once

#include "waring_gaps/exact.hpp"
#include "waring_gaps/repcount.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace waring_gaps {

/// |a_n| > c (n+1) was observed: the growth certificate is invalid.
class GrowthViolation : public Error {
 public:
  using Error::Error;
};

/// A coefficient beyond the accessor's coverage was requested.
class CoverageError : public Error {
 public:
  using Error::Error;
};

/// Closed rational interval [lo, hi] holding a real value.
struct Enclosure {
  Rational lo;
  Rational hi;

  static Enclosure exact(const Rational& v) { return {v, v}; }
  /// [center - radius, center + radius]; radius must be >= 0.
  static Enclosure around(const Rational& center, const Rational& radius);

  Rational width() const { return hi - lo; }
  bool contains(const Rational& v) const { return lo <= v && v <= hi; }
  bool contains(const Enclosure& o) const { return lo <= o.lo && o.hi <= hi; }
  bool intersects(const Enclosure& o) const { return lo <= o.hi && o.lo <= hi; }
  bool excludes_zero() const { return lo > 0 || hi < 0; }
  /// Largest certified lower bound on the absolute value (0 if 0 is inside).
  Rational magnitude_lower_bound() const;

  friend bool operator==(const Enclosure&, const Enclosure&) = default;
};

Enclosure operator+(const Enclosure& a, const Enclosure& b);
Enclosure operator-(const Enclosure& a, const Enclosure& b);
Enclosure operator*(const Enclosure& a, const Enclosure& b);
Enclosure operator*(const BigInt& k, const Enclosure& e);
Enclosure pow(const Enclosure& e, unsigned exponent);

nlohmann::json to_json(const Enclosure& e);
Enclosure enclosure_from_json(const nlohmann::json& j);

enum class Provenance { rep_table, constant, polynomial, linear_combination };

/// A half-function with a declared growth certificate |a_n| <= c (n+1).
///
/// Values are immutable and cheap to copy; concurrent reads are safe.
class HalfFunction {
 public:
  class Node;

  /// f_{ell,s}(z) = sum r_{ell,s}(n) z^n with c = 2^ell.
  static HalfFunction from_table(std::shared_ptr<const RepTable> table);
  /// The constant series `value` (f_{ell,0} = 1).
  static HalfFunction constant(const BigInt& value);
  /// Finitely supported series, known at every index.
  static HalfFunction polynomial(std::map<std::uint64_t, BigInt> coefficients,
                                 const Rational& growth, std::string id = "");

  /// a_n; throws CoverageError or GrowthViolation.
  BigInt coefficient(std::uint64_t n) const;
  const Rational& growth() const;
  /// Largest index with a known coefficient; nullopt means every index.
  std::optional<std::uint64_t> coverage() const;
  /// First index >= from with a nonzero coefficient inside the coverage.
  std::optional<std::uint64_t> next_nonzero(std::uint64_t from) const;
  Provenance provenance() const;
  const std::string& id() const;
  /// Descriptor accepted by function_from_json.
  nlohmann::json describe() const;

  const Node& node() const { return *node_; }

 private:
  explicit HalfFunction(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;

  friend HalfFunction linear_combination(const std::vector<BigInt>&,
                                         const std::vector<HalfFunction>&);
};

/// sum alpha_j f_j with growth certificate sum |alpha_j| c_j.
HalfFunction linear_combination(const std::vector<BigInt>& alphas,
                                const std::vector<HalfFunction>& fs);

/// Where the uncertified part of a tail begins.
struct TailStart {
  bool all_zero = false;    // every coefficient from `from` on is known zero
  std::uint64_t index = 0;  // first index not certified zero
};

TailStart tail_start(const HalfFunction& f, std::uint64_t from);

/// Encloses sum_{i>=0} |a_{start+i}| 2^{-i}: exact partial sum below
/// `cutoff`, plus the 8 c n0 majorant applied at the first index >= cutoff
/// that is not certified zero.
Enclosure tail_norm(const HalfFunction& f, std::uint64_t start,
                    std::uint64_t cutoff);

struct MildGapWitness {
  std::string function_id;
  std::uint64_t n = 0;
  std::uint64_t K = 0;
  Rational E;
  std::uint64_t zero_checked_up_to = 0;  // n + K - 1
  std::uint64_t tail_cutoff = 0;         // exact partial sum stops here
  Enclosure tail_enclosure;              // hi <= E
};

enum class MildGapOutcome { witness, gap_fails, tail_fails, inconclusive };

struct MildGapVerdict {
  MildGapOutcome outcome = MildGapOutcome::gap_fails;
  std::optional<MildGapWitness> witness;
  std::optional<std::uint64_t> nonzero_index;  // when the gap clause fails
  std::optional<Enclosure> tail;               // when the tail was examined
  std::string detail;
};

/// Default tail span past the gap: max(64, 4K).
std::uint64_t default_tail_span(std::uint64_t K);

/// Decides n in MildGap(f; K, E) with a three-valued tail verdict.
MildGapVerdict is_mild_gap(const HalfFunction& f, std::uint64_t n,
                           std::uint64_t K, const Rational& E,
                           std::optional<std::uint64_t> tail_span = {});

/// Re-checks a witness against raw coefficients.
bool replay_witness(const HalfFunction& f, const MildGapWitness& w);

struct MildGapScan {
  std::vector<MildGapWitness> witnesses;
  std::vector<std::uint64_t> inconclusive;
};

/// Every n in [lo, hi) that is a mild gap point, ascending.
MildGapScan scan_mild_gaps(const HalfFunction& f, std::uint64_t lo,
                           std::uint64_t hi, std::uint64_t K, const Rational& E,
                           std::optional<std::uint64_t> tail_span = {});

/// sum_{k < terms} a_k q^{-k}, reduced.
Rational eval_truncated(const HalfFunction& f, unsigned long q,
                        std::uint64_t terms);

/// Encloses f(1/q) using the truncation and the tail majorant
/// c sum_{k>=g} (k+1) q^{-k}, with g the end of any certified gap. Table
/// series have nonnegative coefficients, so their lower end is the truncation.
Enclosure eval_enclosure(const HalfFunction& f, unsigned long q,
                         std::uint64_t terms);

/// c sum_{k>=g} (k+1) q^{-k} in closed form.
Rational growth_tail(const Rational& c, unsigned long q, std::uint64_t g);

nlohmann::json to_json(const MildGapWitness& w);
std::string to_string(MildGapOutcome outcome);

/// Shared rep tables keyed by (ell, s, limit).
class TableCache {
 public:
  std::shared_ptr<const RepTable> get(unsigned ell, unsigned s,
                                      std::uint64_t limit);

 private:
  std::map<std::tuple<unsigned, unsigned, std::uint64_t>,
           std::shared_ptr<const RepTable>>
      tables_;
};

/// theta_{ell}^s as f_{ell,s} (s = 0 gives the constant 1).
HalfFunction theta_power(TableCache& cache, unsigned ell, unsigned s,
                         std::uint64_t limit);

/// Builds a function from a descriptor:
///   {"kind":"polynomial","coefficients":{"0":"1",...},"growth":"1"}
///   {"kind":"theta_power","ell":3,"s":2,"limit":1000}
///   {"kind":"constant","value":"1"}
///   {"kind":"linear_combination","alphas":["1","-2"],"terms":[...]}
HalfFunction function_from_json(const nlohmann::json& j, TableCache& cache);

}  // namespace waring_gaps
