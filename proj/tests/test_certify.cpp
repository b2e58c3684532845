#include "oracles.hpp"
#include "waring_gaps/certify.hpp"
#include "waring_gaps/parallel.hpp"

#include <doctest.h>

using namespace waring_gaps;

namespace {

MaierCertificate worked_maier(std::uint64_t N = 729) {
  return MaierCertificate::make(3, 1, 9, 4, {make_rational(1, 100), make_rational(1, 100)},
                                {0, 0}, N);
}

std::uint64_t brute_maier_count(const MaierCertificate& c, const std::vector<std::uint64_t>& r) {
  std::uint64_t count = 0;
  for (std::uint64_t n = c.m; n + c.K < c.N; n += c.M) {
    bool ok = true;
    for (std::uint64_t k = 0; k <= c.K; ++k) ok = ok && r[n + k] <= c.bigE[k];
    count += ok;
  }
  return count;
}

// f with the a_10 coefficient removed.
NestedGapsCertificate without_a10() {
  auto c = synthetic_nested_certificate();
  c.f = HalfFunction::polynomial({{0, BigInt(1)}, {20, BigInt(1)}}, 1, "f_synthetic");
  return c;
}

std::vector<std::string> failing(const Report& r) {
  std::vector<std::string> out;
  for (const auto& c : r.conditions())
    if (c.verdict != Verdict::pass) out.push_back(c.name);
  return out;
}

}  // namespace

TEST_CASE("report outcome precedence") {
  Report r;
  r.check("a", true);
  CHECK(r.outcome() == Outcome::pass);
  r.add("b", Verdict::inconclusive);
  CHECK(r.outcome() == Outcome::inconclusive);
  r.check("c", false);
  CHECK(r.outcome() == Outcome::fail);
  r.add_invariant("d", false);
  CHECK(r.outcome() == Outcome::invalid);
  CHECK(r.verdict_of("c") == Verdict::fail);
  CHECK(r.find("missing") == nullptr);
  const auto j = r.to_json();
  CHECK(j.at("per_condition").size() == 4);
  CHECK(j.at("per_condition")[0].at("witness").is_object());
  CHECK(j.at("summary").at("outcome") == "INVALID");
  CHECK(verdict_from_string("inconclusive") == Verdict::inconclusive);
  CHECK_THROWS_AS(verdict_from_string("maybe"), Error);
  CHECK(combine(Verdict::pass, Verdict::inconclusive) == Verdict::inconclusive);
  CHECK(combine(Verdict::fail, Verdict::inconclusive) == Verdict::fail);
}

TEST_CASE("Maier worked certificate") {
  const auto cert = worked_maier();
  CHECK(cert.alpha == make_rational(1, 50));
  CHECK(maier_bound(cert) == make_rational(3969, 400));
  const auto table = sieve_rep(WaringParams::make(3, 3), 728);
  const auto rep = verify_maier(cert, table, residue_counts(3, 9));
  CHECK(rep.outcome() == Outcome::pass);
  CHECK(rep.summary.at("count") == 81);
  CHECK(rep.summary.at("bound") == "3969/400");
  CHECK(maier_members(cert, table).size() == 81);

  const auto j = cert.to_json();
  const auto back = MaierCertificate::from_json(j);
  CHECK(back.to_json() == j);
}

TEST_CASE("Maier certificate invariants") {
  const auto table = sieve_rep(WaringParams::make(3, 3), 800);
  const auto profile = residue_counts(3, 9);

  const auto small_N = worked_maier(728);
  const auto r1 = verify_maier(small_N, table, profile);
  CHECK(r1.outcome() == Outcome::invalid);
  CHECK(r1.verdict_of("N >= M^ell") == Verdict::fail);
  CHECK(r1.find("count >= (1-alpha)/2^ell * N/M") != nullptr);  // counted regardless

  auto big_alpha = MaierCertificate::make(3, 1, 9, 4, {1, 1}, {0, 0}, 729);
  CHECK(big_alpha.alpha == 2);
  const auto r2 = verify_maier(big_alpha, table, profile);
  CHECK(r2.outcome() == Outcome::invalid);
  CHECK(r2.verdict_of("alpha < 1") == Verdict::fail);
  CHECK(r2.find("count >= (1-alpha)/2^ell * N/M") == nullptr);

  auto wrong_alpha = worked_maier();
  wrong_alpha.alpha = make_rational(1, 60);
  CHECK(verify_maier(wrong_alpha, table, profile).verdict_of("alpha = sum eps_k/(E_k+1)") ==
        Verdict::fail);

  // eps too small for the residue counts at m = 0.
  const auto tight = MaierCertificate::make(3, 0, 9, 0, {make_rational(1, 100)}, {0}, 729);
  CHECK(verify_maier(tight, table, profile).verdict_of("r(m+k, M) <= eps_k M^{ell-1}") ==
        Verdict::fail);
  CHECK(verify_maier(worked_maier(), table, residue_counts(3, 2)).outcome() == Outcome::invalid);
  CHECK_THROWS_AS(MaierCertificate::make(3, 1, 9, 4, {1}, {0, 0}, 729), Error);
}

TEST_CASE("Maier counts match brute force and are monotone in E") {
  const auto table = sieve_rep(WaringParams::make(3, 3), 20'000);
  const std::vector<std::uint64_t> r(table.counts().begin(), table.counts().end());
  for (std::uint64_t M : {9u, 14u, 18u}) {
    const auto profile = residue_counts(3, M);
    for (std::uint64_t m = 0; m + 2 < M; ++m) {
      std::vector<Rational> eps(3);
      for (std::uint64_t k = 0; k < 3; ++k)
        eps[k] = make_rational(profile.r[m + k] + 1, pow(BigInt(static_cast<unsigned long>(M)), 2));
      bool previous_pass = false;
      for (std::uint64_t e = 0; e < 6; ++e) {
        const auto cert = MaierCertificate::make(3, 2, M, m, eps, {e, 2 * e, e}, 10'000);
        const auto members = maier_members(cert, table);
        CHECK(members.size() == brute_maier_count(cert, r));
        const auto rep = verify_maier(cert, table, profile);
        if (cert.alpha < 1) {
          const bool pass = rep.outcome() == Outcome::pass;
          if (previous_pass) CHECK(pass);
          previous_pass = pass;
          if (pass && maier_bound(cert) >= 1) CHECK_FALSE(members.empty());
        }
      }
    }
  }
}

TEST_CASE("Maier inner inequality") {
  const auto table = sieve_rep(WaringParams::make(3, 3), 2000);
  auto lhs = [&](const Report& r) { return r.summary.at("lhs").get<std::string>(); };
  auto a = verify_maier_inner(3, 4, 0, 9, 1, table);
  CHECK(a.outcome() == Outcome::pass);
  CHECK(lhs(a) == "0");
  auto b = verify_maier_inner(3, 0, 0, 9, 1, table);
  CHECK(b.outcome() == Outcome::pass);
  std::uint64_t expected = 0;
  for (std::uint64_t i = 0; i < 81; ++i) expected += table[9 * i];
  CHECK(lhs(b) == std::to_string(expected));
  CHECK(b.summary.at("rhs") == "189");
  auto c = verify_maier_inner(3, 1, 0, 2, 1, table);
  CHECK(c.outcome() == Outcome::pass);
  CHECK(lhs(c) == "4");
  CHECK(c.summary.at("rhs") == "4");
  CHECK(verify_maier_inner(3, 0, 0, 9, 1, sieve_rep(WaringParams::make(3, 3), 100)).outcome() ==
        Outcome::invalid);
}

TEST_CASE("synthetic nested gaps certificate") {
  const auto cert = synthetic_nested_certificate();
  const auto rep = verify_nested_gaps(cert);
  CHECK(rep.outcome() == Outcome::pass);
  CHECK(rep.find("(iii)")->witness.at("partial_sum") == "1/1024");
  CHECK(rep.summary.at("conclusion").get<std::string>().starts_with("g(1/q) = 0, or"));

  TableCache cache;
  const auto back = NestedGapsCertificate::from_json(cert.to_json(), cache);
  CHECK(back.to_json() == cert.to_json());
  CHECK(verify_nested_gaps(back).to_json() == rep.to_json());
}

TEST_CASE("single-hypothesis mutations") {
  auto h300 = synthetic_nested_certificate();
  h300.H = 300;
  CHECK(failing(verify_nested_gaps(h300)) == std::vector<std::string>{"(iv)"});

  CHECK(failing(verify_nested_gaps(without_a10())) == std::vector<std::string>{"(iii)"});

  // K1 = 10 also breaks the gap clause at n1, since a_10 = 1.
  auto k10 = synthetic_nested_certificate();
  k10.K1 = 10;
  CHECK(failing(verify_nested_gaps(k10)) == std::vector<std::string>{"(i)", "(ii)"});

  auto bad_q = synthetic_nested_certificate();
  bad_q.q = 1;
  CHECK(verify_nested_gaps(bad_q).outcome() == Outcome::invalid);

  // A tail cut too short to decide is inconclusive, never a pass.
  auto g_heavy = synthetic_nested_certificate();
  std::map<std::uint64_t, BigInt> gc{{40, BigInt(1)}};
  for (std::uint64_t n = 41; n < 200; ++n) gc[n] = BigInt(1);
  g_heavy.g = HalfFunction::polynomial(gc, 1, "g_heavy");
  g_heavy.E_prime = make_rational(5, 2);
  g_heavy.H = 10;
  g_heavy.tail_span = 1;
  const auto r = verify_nested_gaps(g_heavy);
  CHECK(r.verdict_of("(ii)") == Verdict::inconclusive);
  CHECK(r.outcome() == Outcome::inconclusive);
}

TEST_CASE("passing certificates bound every tail as the proof needs") {
  // With R = alpha a + beta b and |alpha|, |beta| <= H, the exact tail
  // sum_{n >= n_i} R(n) q^{-n} is below the certificate bound, which is below
  // 2 q^{-n_i}; the truncation then has denominator q^{n_i - 1}.
  for (const auto& cert : {synthetic_nested_certificate(), [] {
                             auto c = synthetic_nested_certificate();
                             c.H = 50;
                             return c;
                           }()}) {
    REQUIRE(verify_nested_gaps(cert).outcome() == Outcome::pass);
    const auto a = std::map<std::uint64_t, BigInt>{{0, 1}, {10, 1}, {20, 1}};
    const auto b = std::map<std::uint64_t, BigInt>{{40, 1}};
    const long H = cert.H.get_num().get_si();
    bool ok = true;
    for (std::uint64_t ni : {cert.n1, cert.n2}) {
      auto from = [&](const std::map<std::uint64_t, BigInt>& s) {
        std::map<std::uint64_t, BigInt> t;
        for (const auto& [n, v] : s)
          if (n >= ni) t[n] = v;
        return oracle::truncated(t, cert.q, 1000);
      };
      const Rational A = from(a), B = from(b);
      const Rational limit = 2 * reciprocal_power(cert.q, ni);
      for (long al = -H; al <= H && ok; ++al)
        for (long be = -H; be <= H; ++be) {
          const Rational tail = abs(Rational(al) * A + Rational(be) * B);
          const Rational bound = nested_tail_bound(cert, BigInt(al), BigInt(be), ni);
          if (!(tail <= bound && bound < limit)) {
            ok = false;
            break;
          }
        }
    }
    CHECK(ok);
  }
}

TEST_CASE("measure on the synthetic certificate") {
  const auto rep = check_measure(synthetic_nested_certificate());
  CHECK(rep.outcome() == Outcome::pass);
  CHECK(rep.summary.at("pairs") == 20'000);
  CHECK(parse_rational(rep.summary.at("min_lower_bound").get<std::string>()) >=
        reciprocal_power(2, 11));

  auto small = synthetic_nested_certificate();
  small.H = 1;
  const auto r1 = check_measure(small);
  CHECK(r1.summary.at("pairs") == 2);
  CHECK(r1.outcome() == Outcome::pass);

  auto failing_base = synthetic_nested_certificate();
  failing_base.H = 300;
  CHECK(check_measure(failing_base).outcome() == Outcome::invalid);

  // Same result for any worker count.
  set_thread_count(1);
  const auto a = check_measure(synthetic_nested_certificate()).to_json();
  set_thread_count(5);
  const auto b = check_measure(synthetic_nested_certificate()).to_json();
  set_thread_count(0);
  CHECK(a == b);
}

TEST_CASE("degree criterion") {
  TableCache cache;
  const auto lower = cache.get(3, 2, 5000);
  const auto full = cache.get(3, 3, 5000);
  DegreeInstance d{3, 2, 1, 1000, 100, 1, 3, 4, 6};
  const auto rep = verify_degree_criterion(d, lower, full);
  CHECK(rep.verdict_of("n1 in MildGap(f_{ell,ell}; K1, E)") == Verdict::pass);
  CHECK(rep.verdict_of("n2 in MildGap(f_{ell,ell}; K1, E)") == Verdict::pass);
  CHECK(rep.verdict_of("(i)") == Verdict::pass);
  CHECK(rep.verdict_of("(ii)") == Verdict::fail);
  CHECK(rep.find("(ii)")->witness.at("n") == 8);
  CHECK(rep.verdict_of("(iii)") == Verdict::fail);
  CHECK(rep.verdict_of("(iv)") == Verdict::fail);
  CHECK(rep.summary.at("certifiable_J_supremum") == "1/500");
  CHECK(rep.summary.at("largest_integer_J") == "0");
  CHECK(certifiable_J_supremum(2, 1, 10, 5, 5) == make_rational(16, 5));

  CHECK(verify_degree_criterion(d, full, full).outcome() == Outcome::invalid);
  DegreeInstance far = d;
  far.n2 = 6000;
  CHECK(verify_degree_criterion(far, lower, full).outcome() == Outcome::invalid);

  const auto found = find_degree_instance(3, 2, 1000, 2, 4000, lower, full);
  REQUIRE(found);
  DegreeInstance inst = *found;
  inst.J = certifiable_J_supremum(2, 1000, 4000, inst.K1, inst.K2) / 2;
  const auto ok = verify_degree_criterion(inst, lower, full);
  CHECK(ok.outcome() == Outcome::pass);

  const auto nested = nested_from_degree(inst, {1, -1, 2}, cache, 5000);
  CHECK(nested.H == inst.J / (8 * 3 * 8 * 2));
  CHECK(nested.E_prime == 8 * 3 * 8 * 2 * 4000);
  CHECK(nested.K_prime == inst.n2 - inst.n1 + inst.K2);
  CHECK_THROWS_AS(nested_from_degree(inst, {0, 0, 0}, cache, 5000), Error);
}

TEST_CASE("theta linear forms") {
  TableCache cache;
  const auto powers = theta_power_enclosures(3, 2, 64, cache);
  REQUIRE(powers.size() == 4);
  CHECK(powers[0] == Enclosure::exact(1));
  const auto cube = evaluate_linear_form(LinearForm::make({0, 0, 0, 1}, 1), powers);
  CHECK(cube.lo >= make_rational(340, 100));
  CHECK(cube.hi <= make_rational(341, 100));
  CHECK(cube.contains(pow(Rational(make_rational(385, 256) + reciprocal_power(2, 27)), 3)));
  CHECK_THROWS_AS(evaluate_linear_form(LinearForm::make({1, 0, 0, 0}, 1), powers), Error);
  CHECK_THROWS_AS(LinearForm::make({3, 0, 0, 1}, 2), Error);

  const auto rep = check_theta_linear_forms(3, 2, 2, 64);
  CHECK(rep.outcome() == Outcome::pass);
  CHECK(rep.summary.at("forms") == 500);
  CHECK(parse_rational(rep.summary.at("L_min").get<std::string>()) > 0);
  CHECK(rep.verdict_of("interval powers meet direct series enclosures") == Verdict::pass);
}

TEST_CASE("measure and theta bounds agree on a shared form") {
  // alpha theta^3 + beta (theta^3 - theta^3) reduces to the cube form.
  TableCache cache;
  NestedGapsCertificate c;
  c.q = 2;
  c.H = 1;
  c.f = theta_power(cache, 3, 3, 4000);
  c.g = linear_combination({1, -1}, {c.f, c.f});
  const auto ef = eval_enclosure(c.f, 2, 200);
  const auto powers = theta_power_enclosures(3, 2, 200, cache);
  const auto form = evaluate_linear_form(LinearForm::make({0, 0, 0, 1}, 1), powers);
  CHECK(ef.intersects(form));
}

TEST_CASE("finite schedule alpha") {
  const Rational xi = make_rational(32, 3);
  // k = 0: floor(128) + 1 = 129.
  CHECK(schedule_alpha(2, 2, xi) == make_rational(1, 2) + xi / 129);
  for (std::uint64_t K2 = 2; K2 < 40; ++K2) CHECK(schedule_alpha(2, K2, xi) < make_rational(3, 4));
  CHECK(schedule_alpha(1, 10, xi) < schedule_alpha(1, 11, xi));
}

TEST_CASE("pipeline dry runs") {
  PipelineConfig cfg;
  const auto rep = pipeline_dry_run(cfg);
  CHECK(rep.summary.at("completed") == true);
  CHECK(rep.summary.at("M") == 18);
  CHECK(rep.summary.at("N") == 12012);
  CHECK(rep.verdict_of("finite-schedule alpha < 3/4") == Verdict::pass);
  CHECK(parse_rational(rep.summary.at("alpha").get<std::string>()) < make_rational(3, 4));
  CHECK(rep.verdict_of("N >= M^ell") == Verdict::pass);
  CHECK(rep.find("criterion: (iv)") != nullptr);

  PipelineConfig tiny;
  tiny.max_N = 1000;
  const auto t = pipeline_dry_run(tiny);
  CHECK(t.verdict_of("N >= M^ell") == Verdict::fail);
  CHECK(t.summary.at("completed") == false);

  PipelineConfig four;
  four.ell = 4;
  const auto f = pipeline_dry_run(four);
  CHECK(f.summary.at("completed") == true);
  CHECK(f.summary.at("M") == 16);
  CHECK(f.find("A not contained in A_N") != nullptr);

  CHECK(cfg.resolved().sigma == make_rational(13, 4));
  CHECK(four.resolved().sigma == make_rational(201, 50));
  CHECK(four.resolved().pool == std::vector<std::uint64_t>{3, 5, 16});
  CHECK(cfg.resolved().product_bound == cfg.max_M);
}
