// Machine checks for the certificate-shaped results: the Maier counting
// bound, the nested gaps principle and its degree criterion, the linear
// independence measures, and a desk-scale run of the full parameter recipe.
//
// Every check returns a Report; hypotheses are verified exactly and each is
// listed with its own verdict. A sweep never stops at the first failure.
#pragma once

#include "waring_gaps/exact.hpp"
#include "waring_gaps/modular.hpp"
#include "waring_gaps/repcount.hpp"
#include "waring_gaps/report.hpp"
#include "waring_gaps/series.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace waring_gaps {

// ------------------------------------------------------------------ Maier

struct MaierCertificate {
  unsigned ell = 3;
  std::uint64_t K = 0;
  std::uint64_t M = 1;
  std::uint64_t m = 0;
  std::vector<Rational> eps;       // K+1 entries, positive
  std::vector<std::uint64_t> bigE;  // K+1 entries
  std::uint64_t N = 0;
  Rational alpha;                  // sum eps[k] / (bigE[k] + 1)

  static Rational alpha_of(const std::vector<Rational>& eps,
                           const std::vector<std::uint64_t>& bigE);
  /// Fills alpha from eps and bigE.
  static MaierCertificate make(unsigned ell, std::uint64_t K, std::uint64_t M,
                               std::uint64_t m, std::vector<Rational> eps,
                               std::vector<std::uint64_t> bigE, std::uint64_t N);

  nlohmann::json to_json() const;
  static MaierCertificate from_json(const nlohmann::json& j);
};

/// n in [0, N-K) with n = m (mod M) and r(n+k) <= bigE[k] for all k.
std::vector<std::uint64_t> maier_members(const MaierCertificate& cert,
                                         const RepTable& table);

/// (1 - alpha) / 2^ell * N / M.
Rational maier_bound(const MaierCertificate& cert);

Report verify_maier(const MaierCertificate& cert, const RepTable& table,
                    const ResidueProfile& profile);

/// sum_{i < L^ell M^{ell-1}} r(m+k+iM) <= L^ell r_{ell,ell}(m+k, M).
Report verify_maier_inner(unsigned ell, std::uint64_t m, std::uint64_t k,
                          std::uint64_t M, std::uint64_t L, const RepTable& table);

// ------------------------------------------------------------ nested gaps

struct NestedGapsCertificate {
  unsigned long q = 2;
  Rational H;
  std::uint64_t K1 = 1, K2 = 1, K_prime = 2;
  std::uint64_t n_prime = 0, n1 = 0, n2 = 1;
  Rational E, E_prime;
  HalfFunction f = HalfFunction::constant(0);
  HalfFunction g = HalfFunction::constant(0);
  std::optional<std::uint64_t> tail_span;  // mild gap cutoff span

  nlohmann::json to_json() const;
  static NestedGapsCertificate from_json(const nlohmann::json& j, TableCache& cache);
};

/// Hand-checkable instance: f = 1 + z^10 + z^20, g = z^40, q = 2, H = 100,
/// K1 = K2 = 9, K' = 39, n1 = n' = 1, n2 = 11, E = 2, E' = 1.
NestedGapsCertificate synthetic_nested_certificate();

/// Checks hypotheses (i)-(iv); an inconclusive tail never yields PASS.
Report verify_nested_gaps(const NestedGapsCertificate& cert);

/// For every integer pair with alpha != 0 and |alpha| + |beta| <= H,
/// certifies |alpha f(1/q) + beta g(1/q)| >= q^{-n2}.
Report check_measure(const NestedGapsCertificate& cert,
                     std::optional<std::uint64_t> terms = {});

/// Tail of sum R(n) q^{-n} from n_i, R = alpha a + beta b, bounded via the
/// certificate's E and E'.
Rational nested_tail_bound(const NestedGapsCertificate& cert, const BigInt& alpha,
                           const BigInt& beta, std::uint64_t n_i);

// --------------------------------------------------------- degree criterion

struct DegreeInstance {
  unsigned ell = 3;
  unsigned long q = 2;
  Rational J;
  Rational E;
  std::uint64_t N = 0;
  std::uint64_t K1 = 1, K2 = 1;
  std::uint64_t n1 = 0, n2 = 0;

  nlohmann::json to_json() const;
};

/// Supremum of J with q^{K1} > J E and q^{K2} > J N.
Rational certifiable_J_supremum(unsigned long q, const Rational& E, std::uint64_t N,
                                std::uint64_t K1, std::uint64_t K2);

/// Conditions (i)-(iv) of the degree criterion plus the mild gap checks of
/// n1, n2 in f_{ell,ell}. `lower` is the (ell, ell-1) table, `full` the
/// (ell, ell) table.
Report verify_degree_criterion(const DegreeInstance& inst,
                               std::shared_ptr<const RepTable> lower,
                               std::shared_ptr<const RepTable> full,
                               std::optional<std::uint64_t> tail_span = {});

/// Searches sieved gaps for the instance with the largest certifiable J.
/// J in the returned instance is left at 0 for the caller to choose.
std::optional<DegreeInstance> find_degree_instance(
    unsigned ell, unsigned long q, const Rational& E, std::uint64_t K1,
    std::uint64_t N, std::shared_ptr<const RepTable> lower,
    std::shared_ptr<const RepTable> full,
    std::optional<std::uint64_t> tail_span = {});

/// Nested gaps data derived from a degree instance and the form
/// coefficients alpha_0..alpha_{ell-1}: f = f_{ell,ell}, g = sum alpha_j
/// f_{ell,j}, n' = n1, K' = n2 - n1 + K2, E' = 8 c N with
/// c = ell 2^ell max|alpha_j|, H = J / (8c).
NestedGapsCertificate nested_from_degree(const DegreeInstance& inst,
                                         const std::vector<BigInt>& alphas,
                                         TableCache& cache, std::uint64_t limit);

// --------------------------------------------------------- linear forms

struct LinearForm {
  std::vector<BigInt> coefficients;  // alpha_0 .. alpha_ell
  BigInt height;                     // bound on max |alpha_j|

  /// Throws unless max |alpha_j| <= height.
  static LinearForm make(std::vector<BigInt> coefficients, BigInt height);
};

/// Enclosures of theta(q)^j for j = 0..ell from the direct f_{ell,j} series.
std::vector<Enclosure> theta_power_enclosures(unsigned ell, unsigned long q,
                                              std::uint64_t terms,
                                              TableCache& cache);

/// Enclosure of P(Theta) = sum alpha_j theta(q)^j. Requires alpha_ell != 0.
Enclosure evaluate_linear_form(const LinearForm& form,
                               const std::vector<Enclosure>& powers);

/// Every form with max |alpha_j| <= height and alpha_ell != 0 is certified
/// nonzero; reports the minimal certified lower bound.
Report check_theta_linear_forms(unsigned ell, unsigned long q, std::uint64_t height,
                                std::uint64_t terms);

// ---------------------------------------------------------------- pipeline

struct PipelineConfig {
  unsigned ell = 3;
  unsigned long q = 2;
  Rational J = 1;
  Rational sigma;  // defaults to 13/4 (ell = 3) or 201/50 (ell = 4)
  Rational xi;     // defaults to 32/3
  std::uint64_t K1 = 2;
  std::vector<std::uint64_t> pool;  // defaults to {2, 7, 9} or {3, 5, 16}
  std::uint64_t product_bound = 0;  // defaults to max_M
  bool require_even = true;
  std::uint64_t max_M = 200;
  std::uint64_t max_N = 2'000'000;
  std::uint64_t max_sieve = 4'000'000;
  std::optional<std::uint64_t> tail_span;

  /// Fills defaults that depend on ell.
  PipelineConfig resolved() const;
  nlohmann::json to_json() const;
};

/// Runs the parameter recipe end to end at desk scale, reporting every step.
Report pipeline_dry_run(const PipelineConfig& config);

/// The finite-schedule alpha: K1 * (1/(2K1)) + sum_{k=0}^{K2-K1} xi/(E_k+1)
/// with E_k = floor(12 xi (3/2)^k).
Rational schedule_alpha(std::uint64_t K1, std::uint64_t K2, const Rational& xi);

}  // namespace waring_gaps
