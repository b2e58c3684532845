#include "oracles.hpp"
#include "waring_gaps/exact.hpp"
#include "waring_gaps/parallel.hpp"

#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <random>

using namespace waring_gaps;

TEST_CASE("rationals are canonical and print as p/q") {
  CHECK(to_string(make_rational(6, 4)) == "3/2");
  CHECK(to_string(make_rational(-6, -4)) == "3/2");
  CHECK(to_string(make_rational(5, 1)) == "5/1");
  CHECK(to_string(Rational(0)) == "0/1");
  CHECK(parse_rational("10/4") == make_rational(5, 2));
  CHECK(parse_rational("-7") == Rational(-7));
  CHECK(parse_rational("+3/9") == make_rational(1, 3));
  CHECK_THROWS_AS(parse_rational("1/0"), Error);
  CHECK_THROWS_AS(parse_rational("1/-2"), Error);
  CHECK_THROWS_AS(parse_rational("abc"), Error);
  CHECK_THROWS_AS(parse_rational(""), Error);
  CHECK_THROWS_AS(parse_bigint("12x"), Error);
  CHECK(parse_bigint("123456789012345678901234567890").get_str() ==
        "123456789012345678901234567890");
}

TEST_CASE("u64 conversion is exact and checked") {
  CHECK(to_u64(from_u64(UINT64_MAX)) == UINT64_MAX);
  CHECK(from_u64(UINT64_MAX).get_str() == "18446744073709551615");
  CHECK_THROWS_AS(to_u64(from_u64(UINT64_MAX) + 1), OverflowError);
  CHECK_THROWS_AS(to_u64(BigInt(-1)), OverflowError);
}

TEST_CASE("checked_pow reports overflow") {
  CHECK(checked_pow(10, 4) == std::optional<std::uint64_t>(10000));
  CHECK(checked_pow(0, 0) == std::optional<std::uint64_t>(1));
  CHECK(checked_pow(2, 63) == std::optional<std::uint64_t>(std::uint64_t{1} << 63));
  CHECK_FALSE(checked_pow(2, 64).has_value());
  CHECK_FALSE(checked_pow(2642246, 3).has_value());
  CHECK(checked_pow(2642245, 3).has_value());
}

TEST_CASE("floor_root small cases") {
  CHECK(floor_root(3u, std::uint64_t{26}) == 2);
  CHECK(floor_root(3u, std::uint64_t{27}) == 3);
  CHECK(floor_root(4u, std::uint64_t{10000}) == 10);
  CHECK(floor_root(4u, std::uint64_t{9999}) == 9);
  CHECK(floor_root(1u, std::uint64_t{77}) == 77);
  CHECK(floor_root(3u, std::uint64_t{0}) == 0);
  CHECK(floor_root(3u, UINT64_MAX) == 2642245);
  CHECK(floor_root(2u, UINT64_MAX) == 4294967295u);
}

TEST_CASE("floor_root matches exact bracketing on random inputs") {
  std::mt19937_64 rng(20240601);
  for (unsigned ell : {3u, 4u}) {
    for (int i = 0; i < 1'000'000; ++i) {
      // Mix the bit length so small and large values both appear.
      const std::uint64_t b = rng() >> (rng() % 64);
      const std::uint64_t x = floor_root(ell, b);
      const BigInt B = from_u64(b);
      const bool ok = pow(from_u64(x), ell) <= B && pow(BigInt(from_u64(x) + 1), ell) > B;
      if (!ok) {
        FAIL("floor_root(" << ell << ", " << b << ") = " << x);
      }
    }
  }
}

TEST_CASE("BigInt floor_root agrees with bisection") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    BigInt b = from_u64(rng());
    b = b * from_u64(rng()) * from_u64(rng() % 1000 + 1);
    const unsigned long ell = 2 + rng() % 6;
    CHECK(floor_root(ell, b) == oracle::floor_root(ell, b));
  }
  CHECK(floor_root(16384ul, pow(BigInt(2), 4059)) == 1);
}

TEST_CASE("fractional power comparisons are exact") {
  // 25 * 8^{1/3} = 50
  CHECK(less_than_scaled_power(49, 25, 8, 1, 3));
  CHECK_FALSE(less_than_scaled_power(50, 25, 8, 1, 3));
  // 1 < 2^{4059/16384}
  CHECK(less_than_scaled_power(1, 1, 2, 4059, 16384));
  CHECK_FALSE(less_than_scaled_power(2, 1, 2, 4059, 16384));
  CHECK_THROWS_AS(less_than_scaled_power(1, 0, 2, 1, 2), Error);
}

TEST_CASE("floor_power is the largest N with N^q <= b^p") {
  const BigInt N = floor_power(18, 13, 4);
  CHECK(pow(N, 4) <= pow(BigInt(18), 13));
  CHECK(pow(BigInt(N + 1), 4) > pow(BigInt(18), 13));
  CHECK(N == 12012);
  CHECK(floor_power(9, 3, 1) == 729);
}

TEST_CASE("reciprocal powers") {
  CHECK(reciprocal_power(2, 3) == make_rational(1, 8));
  CHECK(reciprocal_power(7, 0) == 1);
  CHECK(pow(make_rational(-2, 3), 3) == make_rational(-8, 27));
}

TEST_CASE("thread count lookup order") {
  set_thread_count(0);
  unsetenv("WARING_GAPS_THREADS");
  CHECK(thread_count() == 1);
  setenv("WARING_GAPS_THREADS", "5", 1);
  CHECK(thread_count() == 5);
  setenv("WARING_GAPS_THREADS", "junk", 1);
  CHECK(thread_count() == 1);
  set_thread_count(3);
  CHECK(thread_count() == 3);
  set_thread_count(0);
  unsetenv("WARING_GAPS_THREADS");
}

TEST_CASE("parallel_chunks covers each index once with fixed boundaries") {
  for (unsigned threads : {1u, 2u, 7u}) {
    set_thread_count(threads);
    std::vector<std::atomic<int>> hits(10'007);
    std::vector<std::pair<std::size_t, std::size_t>> bounds(13);
    parallel_chunks(0, hits.size(), 13, [&](std::size_t lo, std::size_t hi, std::size_t c) {
      bounds[c] = {lo, hi};
      for (std::size_t i = lo; i < hi; ++i) ++hits[i];
    });
    for (auto& h : hits) CHECK(h.load() == 1);
    CHECK(bounds.front().first == 0);
    CHECK(bounds.back().second == hits.size());
    for (std::size_t c = 1; c < bounds.size(); ++c)
      CHECK(bounds[c].first == bounds[c - 1].second);
    CHECK(bounds[6].first == 10'007 * 6 / 13);
  }
  set_thread_count(0);
}

TEST_CASE("parallel_chunks rethrows worker exceptions") {
  set_thread_count(4);
  CHECK_THROWS_AS(parallel_chunks(0, 100, 8,
                                  [](std::size_t lo, std::size_t, std::size_t) {
                                    if (lo >= 50) throw Error("boom");
                                  }),
                  Error);
  set_thread_count(0);
}
