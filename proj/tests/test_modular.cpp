#include "oracles.hpp"
#include "waring_gaps/modular.hpp"

#include <doctest.h>

#include <numeric>
#include <sstream>

using namespace waring_gaps;

namespace {
std::vector<std::uint64_t> to_u64s(const ResidueProfile& p) {
  std::vector<std::uint64_t> out;
  for (const auto& v : p.r) out.push_back(to_u64(v));
  return out;
}
}  // namespace

TEST_CASE("power histograms") {
  CHECK(power_histogram(3, 2).counts == std::vector<std::uint64_t>{1, 1});
  const auto h9 = power_histogram(3, 9).counts;
  CHECK(h9 == std::vector<std::uint64_t>{3, 3, 0, 0, 0, 0, 0, 0, 3});
  const auto h16 = power_histogram(4, 16).counts;
  CHECK(h16[0] == 8);
  CHECK(h16[1] == 8);
  CHECK(std::accumulate(h16.begin(), h16.end(), std::uint64_t{0}) == 16);
  CHECK(power_histogram(4, 1).counts == std::vector<std::uint64_t>{1});
  CHECK_THROWS_AS(power_histogram(3, 0), Error);
}

TEST_CASE("residue profile examples") {
  const auto p9 = residue_counts(3, 9);
  CHECK(p9.r[4] == 0);
  CHECK(p9.r[5] == 0);
  CHECK(p9.r[0] == 189);
  CHECK(p9.mass() == 729);
  CHECK(p9.at(-5) == p9.r[4]);
  CHECK(p9.at(22) == p9.r[4]);
  const auto p2 = residue_counts(3, 2);
  CHECK(to_u64s(p2) == std::vector<std::uint64_t>{4, 4});
}

TEST_CASE("residue profiles match exhaustive enumeration") {
  for (unsigned ell : {3u, 4u})
    for (std::uint64_t M = 1; M <= 30; ++M) {
      CAPTURE(ell);
      CAPTURE(M);
      const auto p = residue_counts(ell, M);
      CHECK(to_u64s(p) == oracle::residue_counts(ell, M));
      CHECK(p.mass() == pow(from_u64(M), ell));
    }
}

TEST_CASE("CRT combination") {
  const auto p2 = residue_counts(3, 2), p9 = residue_counts(3, 9);
  const auto p18 = crt_combine(p2, p9);
  CHECK(p18.modulus == 18);
  CHECK(p18.r[4] == 0);
  CHECK(p18.mass() == 18 * 18 * 18);
  CHECK(crt_combine(p9, residue_counts(3, 1)) == p9);
  CHECK(crt_combine(residue_counts(3, 1), p9) == p9);
  CHECK_THROWS_AS(crt_combine(residue_counts(3, 6), residue_counts(3, 4)), Error);
  CHECK_THROWS_AS(crt_combine(residue_counts(3, 2), residue_counts(4, 3)), Error);
}

TEST_CASE("multiplicativity for coprime products up to 200") {
  for (unsigned ell : {3u, 4u})
    for (std::uint64_t a = 2; a <= 100; ++a)
      for (std::uint64_t b = 2; a * b <= 200; ++b) {
        if (std::gcd(a, b) != 1) continue;
        CAPTURE(ell);
        CAPTURE(a);
        CAPTURE(b);
        CHECK(crt_combine(residue_counts(ell, a), residue_counts(ell, b)) ==
              residue_counts(ell, a * b));
      }
}

TEST_CASE("doubling an odd modulus scales counts by 2^{ell-1}") {
  for (unsigned ell : {3u, 4u})
    for (std::uint64_t M = 1; M <= 99; M += 2) {
      const auto p = residue_counts(ell, M), p2 = residue_counts(ell, 2 * M);
      bool ok = true;
      for (std::uint64_t m = 0; m < 2 * M; ++m)
        ok = ok && p2.r[m] == p.r[m % M] * (1u << (ell - 1));
      CAPTURE(ell);
      CAPTURE(M);
      CHECK(ok);
    }
}

TEST_CASE("modulus search examples") {
  const auto a = search_gap_modulus(3, 2, {9});
  REQUIRE(a);
  CHECK(a->modulus == 9);
  CHECK(a->start == 4);
  CHECK(a->window_quality == 0);
  CHECK(a->global_quality == make_rational(189, 81));
  CHECK(a->meets_iii);
  CHECK(a->per_k_quality == std::vector<Rational>{0, 0});

  CHECK_FALSE(search_gap_modulus(3, 1, {2}).has_value());

  const auto c = search_gap_modulus(4, 1, {16});
  REQUIRE(c);
  CHECK(c->modulus == 16);
  CHECK(c->start == 5);
  CHECK(residue_counts(4, 16).r[5] == 0);
}

TEST_CASE("modulus search order and options") {
  ModulusSearchOptions o;
  o.product_bound = 100;
  CHECK(candidate_moduli({9, 2, 7, 2}, o) == std::vector<std::uint64_t>{2, 7, 9, 14, 18, 63});
  o.require_even = true;
  CHECK(candidate_moduli({9, 2, 7}, o) == std::vector<std::uint64_t>{2, 14, 18});
  CHECK(candidate_moduli({9, 2, 7}, {}) == std::vector<std::uint64_t>{2, 7, 9});

  // Ties on quality 0 go to the smaller modulus, then the smaller start.
  const auto best = search_gap_modulus(3, 2, {9, 2}, {.product_bound = 100});
  REQUIRE(best);
  CHECK(best->modulus == 9);
  CHECK(best->start == 4);

  ModulusSearchOptions even{.product_bound = 100, .require_small_start = true,
                            .require_even = true};
  const auto e = search_gap_modulus(3, 2, {9, 2, 7}, even);
  REQUIRE(e);
  CHECK(e->modulus % 2 == 0);
  CHECK(2 * e->start < e->modulus);

  // Brute-force optimum over the same candidates.
  for (std::uint64_t K1 : {1u, 2u, 3u}) {
    Rational best_q = -1;
    std::uint64_t bm = 0, bs = 0;
    for (auto M : candidate_moduli({2, 7, 9}, {.product_bound = 200})) {
      const auto p = oracle::residue_counts(3, M);
      for (std::uint64_t m = 0; m < M; ++m) {
        Rational q = 0;
        for (std::uint64_t k = 0; k < K1; ++k)
          q = std::max(q, Rational(Rational(from_u64(p[(m + k) % M])) / Rational(from_u64(M * M))));
        if (best_q < 0 || q < best_q) {
          best_q = q;
          bm = M;
          bs = m;
        }
      }
    }
    const auto got = search_gap_modulus(3, K1, {2, 7, 9}, {.product_bound = 200});
    if (best_q <= Rational(1) / Rational(2 * K1)) {
      REQUIRE(got);
      CHECK(got->modulus == bm);
      CHECK(got->start == bs);
      CHECK(got->window_quality == best_q);
    } else {
      CHECK_FALSE(got.has_value());
    }
  }
}

TEST_CASE("candidate evaluation and serialization") {
  const auto profile = residue_counts(3, 9);
  const auto c = evaluate_modulus(profile, 3, 3);
  const Rational r3 = make_rational(profile.r[3], BigInt(81));
  CHECK(c.per_k_quality == std::vector<Rational>{r3, 0, 0});
  CHECK(c.window_quality == r3);
  CHECK(c.meets_iii == (r3 <= make_rational(1, 6)));
  CHECK_THROWS_AS(evaluate_modulus(profile, 0, 0), Error);
  const auto j = to_json(c);
  CHECK(j.at("M") == 9);
  CHECK(j.at("m") == 3);
  CHECK(j.at("K1") == 3);
  CHECK(j.at("global_quality") == "7/3");
  CHECK(j.at("per_k_quality").size() == 3);

  std::ostringstream csv;
  write_csv(residue_counts(3, 2), csv);
  CHECK(csv.str() == "m,count\n0,4\n1,4\n");
}
