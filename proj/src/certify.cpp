#include "waring_gaps/certify.hpp"

#include "waring_gaps/parallel.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace waring_gaps {

namespace {

Rational qpow(unsigned long q, std::uint64_t k) { return Rational(pow(BigInt(q), k)); }

std::string display(const Rational& r) {
  std::ostringstream out;
  out.precision(6);
  out << r.get_d();
  return out.str();
}

Verdict verdict_of(MildGapOutcome o) {
  switch (o) {
    case MildGapOutcome::witness: return Verdict::pass;
    case MildGapOutcome::inconclusive: return Verdict::inconclusive;
    default: return Verdict::fail;
  }
}

nlohmann::json mild_gap_json(const MildGapVerdict& v) {
  nlohmann::json j = {{"outcome", to_string(v.outcome)}, {"detail", v.detail}};
  if (v.nonzero_index) j["nonzero_index"] = *v.nonzero_index;
  if (v.tail) j["tail_enclosure"] = to_json(*v.tail);
  return j;
}

// Mild gap verdict that reports coverage shortfalls as inconclusive.
std::pair<Verdict, nlohmann::json> mild_gap_check(const HalfFunction& f,
                                                  std::uint64_t n, std::uint64_t K,
                                                  const Rational& E,
                                                  std::optional<std::uint64_t> span) {
  try {
    MildGapVerdict v = is_mild_gap(f, n, K, E, span);
    nlohmann::json j = mild_gap_json(v);
    j["function"] = f.id();
    j["n"] = n;
    j["K"] = K;
    j["E"] = to_string(E);
    return {verdict_of(v.outcome), j};
  } catch (const CoverageError& e) {
    return {Verdict::inconclusive, {{"function", f.id()}, {"n", n}, {"detail", e.what()}}};
  }
}

std::vector<Rational> rationals_from_json(const nlohmann::json& j) {
  std::vector<Rational> out;
  for (const auto& v : j) out.push_back(parse_rational(v.get<std::string>()));
  return out;
}

}  // namespace

// ------------------------------------------------------------------ Maier

Rational MaierCertificate::alpha_of(const std::vector<Rational>& eps,
                                    const std::vector<std::uint64_t>& bigE) {
  if (eps.size() != bigE.size()) throw Error("eps and E need the same length");
  Rational a = 0;
  for (std::size_t k = 0; k < eps.size(); ++k)
    a += eps[k] / Rational(from_u64(bigE[k]) + 1);
  return a;
}

MaierCertificate MaierCertificate::make(unsigned ell, std::uint64_t K, std::uint64_t M,
                                        std::uint64_t m, std::vector<Rational> eps,
                                        std::vector<std::uint64_t> bigE,
                                        std::uint64_t N) {
  MaierCertificate c{ell, K, M, m, std::move(eps), std::move(bigE), N, 0};
  c.alpha = alpha_of(c.eps, c.bigE);
  return c;
}

nlohmann::json MaierCertificate::to_json() const {
  nlohmann::json e = nlohmann::json::array();
  for (const auto& v : eps) e.push_back(to_string(v));
  return {{"ell", ell}, {"K", K},   {"M", M},
          {"m", m},     {"eps", e}, {"E", bigE},
          {"N", N},     {"alpha", to_string(alpha)}};
}

MaierCertificate MaierCertificate::from_json(const nlohmann::json& j) {
  MaierCertificate c;
  c.ell = j.at("ell").get<unsigned>();
  c.K = j.at("K").get<std::uint64_t>();
  c.M = j.at("M").get<std::uint64_t>();
  c.m = j.at("m").get<std::uint64_t>();
  c.eps = rationals_from_json(j.at("eps"));
  c.bigE = j.at("E").get<std::vector<std::uint64_t>>();
  c.N = j.at("N").get<std::uint64_t>();
  c.alpha = j.contains("alpha") ? parse_rational(j.at("alpha").get<std::string>())
                                : alpha_of(c.eps, c.bigE);
  return c;
}

std::vector<std::uint64_t> maier_members(const MaierCertificate& cert,
                                         const RepTable& table) {
  if (cert.M == 0 || cert.bigE.size() != cert.K + 1)
    throw Error("malformed Maier certificate");
  if (cert.N <= cert.K || cert.m >= cert.N - cert.K) return {};
  if (!table.covers(cert.N - 1)) throw Error("table does not cover [0, N)");
  const std::uint64_t rows = (cert.N - cert.K - cert.m + cert.M - 1) / cert.M;
  const std::size_t chunks = default_chunks(rows);
  std::vector<std::vector<std::uint64_t>> parts(chunks);
  auto counts = table.counts();
  parallel_chunks(0, rows, chunks, [&](std::size_t lo, std::size_t hi, std::size_t c) {
    for (std::size_t i = lo; i < hi; ++i) {
      const std::uint64_t n = cert.m + i * cert.M;
      bool ok = true;
      for (std::uint64_t k = 0; k <= cert.K && ok; ++k) ok = counts[n + k] <= cert.bigE[k];
      if (ok) parts[c].push_back(n);
    }
  });
  std::vector<std::uint64_t> out;
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

Rational maier_bound(const MaierCertificate& cert) {
  return (1 - cert.alpha) / Rational(BigInt(1) << cert.ell) *
         make_rational(from_u64(cert.N), from_u64(cert.M));
}

Report verify_maier(const MaierCertificate& cert, const RepTable& table,
                    const ResidueProfile& profile) {
  Report rep;
  rep.certificate = cert.to_json();
  const bool sizes = cert.eps.size() == cert.K + 1 && cert.bigE.size() == cert.K + 1;
  rep.add_invariant("eps and E have K+1 entries", sizes);
  rep.add_invariant("eps_k > 0", sizes && std::all_of(cert.eps.begin(), cert.eps.end(),
                                                      [](const Rational& e) { return e > 0; }));
  rep.add_invariant("m + K < M", cert.m + cert.K < cert.M,
                    {{"m_plus_K", cert.m + cert.K}, {"M", cert.M}});
  const BigInt M_ell = pow(from_u64(cert.M), cert.ell);
  rep.add_invariant("N >= M^ell", from_u64(cert.N) >= M_ell,
                    {{"N", cert.N}, {"M^ell", M_ell.get_str()}});
  if (sizes) {
    const Rational alpha = MaierCertificate::alpha_of(cert.eps, cert.bigE);
    rep.add_invariant("alpha = sum eps_k/(E_k+1)", alpha == cert.alpha,
                      {{"computed", to_string(alpha)}, {"declared", to_string(cert.alpha)}});
  }
  const bool alpha_ok = cert.alpha < 1;
  rep.add_invariant("alpha < 1", alpha_ok, {{"alpha", to_string(cert.alpha)}});
  const bool table_ok = table.params() == WaringParams{cert.ell, cert.ell} &&
                        cert.N > 0 && table.covers(cert.N - 1);
  rep.add_invariant("table is r_{ell,ell} covering [0, N)", table_ok,
                    {{"table_limit", table.limit()}});
  const bool profile_ok = profile.modulus == cert.M && profile.ell == cert.ell;
  rep.add_invariant("profile modulus is M", profile_ok);
  if (profile_ok && sizes) {
    const Rational scale(pow(from_u64(cert.M), cert.ell - 1));
    nlohmann::json bad = nlohmann::json::array();
    for (std::uint64_t k = 0; k <= cert.K; ++k) {
      const BigInt& r = profile.at(static_cast<std::int64_t>(cert.m + k));
      if (Rational(r) > cert.eps[k] * scale)
        bad.push_back({{"k", k}, {"r", r.get_str()}, {"eps_k", to_string(cert.eps[k])}});
    }
    rep.add_invariant("r(m+k, M) <= eps_k M^{ell-1}", bad.empty(), {{"violations", bad}});
  }

  rep.summary["alpha"] = to_string(cert.alpha);
  if (!alpha_ok) {
    rep.summary["counting"] = "skipped: alpha >= 1";
    return rep;
  }
  if (!table_ok || !sizes) {
    rep.summary["counting"] = "skipped: table or certificate shape unusable";
    return rep;
  }
  const auto members = maier_members(cert, table);
  const Rational bound = maier_bound(cert);
  const Rational count(from_u64(members.size()));
  rep.check("count >= (1-alpha)/2^ell * N/M", count >= bound,
            {{"count", members.size()}, {"bound", to_string(bound)}});
  rep.summary["count"] = members.size();
  rep.summary["bound"] = to_string(bound);
  rep.summary["display_only"] = {{"bound", display(bound)}};
  return rep;
}

Report verify_maier_inner(unsigned ell, std::uint64_t m, std::uint64_t k,
                          std::uint64_t M, std::uint64_t L, const RepTable& table) {
  Report rep;
  rep.certificate = {{"ell", ell}, {"m", m}, {"k", k}, {"M", M}, {"L", L}};
  if (M == 0) throw Error("M must be positive");
  const BigInt I = pow(from_u64(L), ell) * pow(from_u64(M), ell - 1);
  const BigInt last = from_u64(m + k) + (I - 1) * from_u64(M);
  const bool params_ok = table.params() == WaringParams{ell, ell};
  const bool covered = I == 0 || last <= from_u64(table.limit());
  rep.add_invariant("table is r_{ell,ell}", params_ok);
  rep.add_invariant("table covers m+k+(I-1)M", covered,
                    {{"needed", last.get_str()}, {"table_limit", table.limit()}});
  rep.summary["I"] = I.get_str();
  if (!params_ok || !covered) return rep;

  BigInt lhs = 0;
  const std::uint64_t rows = to_u64(I);
  for (std::uint64_t i = 0; i < rows; ++i) lhs += from_u64(table[m + k + i * M]);
  const ResidueProfile profile = residue_counts(ell, M);
  const BigInt rhs = pow(from_u64(L), ell) * profile.at(static_cast<std::int64_t>(m + k));
  rep.check("sum_i r(m+k+iM) <= L^ell r(m+k, M)", lhs <= rhs,
            {{"lhs", lhs.get_str()}, {"rhs", rhs.get_str()}});
  rep.summary["lhs"] = lhs.get_str();
  rep.summary["rhs"] = rhs.get_str();
  return rep;
}

// ------------------------------------------------------------ nested gaps

nlohmann::json NestedGapsCertificate::to_json() const {
  nlohmann::json j = {{"q", q},
                      {"H", to_string(H)},
                      {"K1", K1},
                      {"K2", K2},
                      {"K_prime", K_prime},
                      {"n_prime", n_prime},
                      {"n1", n1},
                      {"n2", n2},
                      {"E", to_string(E)},
                      {"E_prime", to_string(E_prime)},
                      {"f", f.describe()},
                      {"g", g.describe()}};
  if (tail_span) j["tail_span"] = *tail_span;
  return j;
}

NestedGapsCertificate NestedGapsCertificate::from_json(const nlohmann::json& j,
                                                       TableCache& cache) {
  NestedGapsCertificate c;
  c.q = j.at("q").get<unsigned long>();
  c.H = parse_rational(j.at("H").get<std::string>());
  c.K1 = j.at("K1").get<std::uint64_t>();
  c.K2 = j.at("K2").get<std::uint64_t>();
  c.K_prime = j.at("K_prime").get<std::uint64_t>();
  c.n_prime = j.at("n_prime").get<std::uint64_t>();
  c.n1 = j.at("n1").get<std::uint64_t>();
  c.n2 = j.at("n2").get<std::uint64_t>();
  c.E = parse_rational(j.at("E").get<std::string>());
  c.E_prime = parse_rational(j.at("E_prime").get<std::string>());
  c.f = function_from_json(j.at("f"), cache);
  c.g = function_from_json(j.at("g"), cache);
  if (j.contains("tail_span")) c.tail_span = j.at("tail_span").get<std::uint64_t>();
  return c;
}

NestedGapsCertificate synthetic_nested_certificate() {
  NestedGapsCertificate c;
  c.q = 2;
  c.H = 100;
  c.K1 = c.K2 = 9;
  c.K_prime = 39;
  c.n_prime = c.n1 = 1;
  c.n2 = 11;
  c.E = 2;
  c.E_prime = 1;
  c.f = HalfFunction::polynomial({{0, 1}, {10, 1}, {20, 1}}, 1, "f_synthetic");
  c.g = HalfFunction::polynomial({{40, 1}}, 1, "g_synthetic");
  return c;
}

Report verify_nested_gaps(const NestedGapsCertificate& c) {
  Report rep;
  rep.certificate = c.to_json();
  rep.add_invariant("q >= 2", c.q >= 2);
  rep.add_invariant("H > 0", c.H > 0);
  rep.add_invariant("E > 0 and E' > 0", c.E > 0 && c.E_prime > 0);
  rep.add_invariant("K1 >= 1", c.K1 >= 1);
  if (c.q < 2 || c.E <= 0 || c.E_prime <= 0 || c.K1 == 0) return rep;

  // (i), together with the orderings K1 <= K2 < K' and n' <= n1 < n2.
  nlohmann::json i_w = {{"K1 <= K2 < K'", c.K1 <= c.K2 && c.K2 < c.K_prime},
                        {"n' <= n1 < n2", c.n_prime <= c.n1 && c.n1 < c.n2},
                        {"n1 + K1 < n2", c.n1 + c.K1 < c.n2},
                        {"n2 + K2 <= n' + K'", c.n2 + c.K2 <= c.n_prime + c.K_prime}};
  bool i_ok = true;
  for (const auto& [k, v] : i_w.items()) i_ok = i_ok && v.get<bool>();
  rep.check("(i)", i_ok, i_w);

  auto [v1, w1] = mild_gap_check(c.f, c.n1, c.K1, c.E, c.tail_span);
  auto [v2, w2] = mild_gap_check(c.f, c.n2, c.K1, c.E, c.tail_span);
  auto [v3, w3] = mild_gap_check(c.g, c.n_prime, c.K_prime, c.E_prime, c.tail_span);
  rep.add("(ii)", combine(combine(v1, v2), v3), {{"n1", w1}, {"n2", w2}, {"n_prime", w3}});

  try {
    const Rational partial = eval_truncated(c.f, c.q, c.n2) - eval_truncated(c.f, c.q, c.n1);
    rep.check("(iii)", partial != 0, {{"partial_sum", to_string(partial)}});
  } catch (const CoverageError& e) {
    rep.add("(iii)", Verdict::inconclusive, {{"detail", e.what()}});
  }

  const Rational qK1 = qpow(c.q, c.K1), qK2 = qpow(c.q, c.K2);
  rep.check("(iv)", qK1 > c.H * c.E && qK2 > c.H * c.E_prime,
            {{"q^K1", to_string(qK1)},
             {"H*E", to_string(c.H * c.E)},
             {"q^K2", to_string(qK2)},
             {"H*E'", to_string(c.H * c.E_prime)}});

  rep.summary["conclusion"] =
      rep.outcome() == Outcome::pass
          ? "g(1/q) = 0, or f(1/q) and g(1/q) are linearly independent over Q "
            "against integer pairs with max(|alpha|,|beta|) <= H"
          : "no conclusion";
  return rep;
}

Rational nested_tail_bound(const NestedGapsCertificate& c, const BigInt& alpha,
                           const BigInt& beta, std::uint64_t n_i) {
  return Rational(abs(alpha)) * c.E * reciprocal_power(c.q, n_i + c.K1) +
         Rational(abs(beta)) * c.E_prime * reciprocal_power(c.q, c.n_prime + c.K_prime);
}

Report check_measure(const NestedGapsCertificate& c, std::optional<std::uint64_t> terms) {
  Report base = verify_nested_gaps(c);
  Report rep;
  rep.certificate = c.to_json();
  rep.add_invariant("nested gaps hypotheses pass", base.outcome() == Outcome::pass,
                    {{"outcome", to_string(base.outcome())}});
  if (base.outcome() != Outcome::pass) return rep;

  std::uint64_t t = terms.value_or(c.n2 + 64);
  for (const auto& fn : {c.f, c.g})
    if (auto cov = fn.coverage()) t = std::min<std::uint64_t>(t, *cov + 1);
  const Enclosure ef = eval_enclosure(c.f, c.q, t);
  const Enclosure eg = eval_enclosure(c.g, c.q, t);
  const Rational bound = reciprocal_power(c.q, c.n2);
  const long H = static_cast<long>(mpz_class(c.H.get_num() / c.H.get_den()).get_si());

  struct Slot {
    std::uint64_t pairs = 0;
    std::optional<Rational> min_lb;
    std::pair<long, long> argmin{0, 0};
    std::vector<std::pair<long, long>> failing, open;
  };
  // alpha runs over -H..-1, 1..H in that order; chunked by alpha index.
  std::vector<long> alphas;
  for (long a = -H; a <= H; ++a)
    if (a != 0) alphas.push_back(a);
  const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(alphas.size(), 16));
  std::vector<Slot> slots(chunks);
  parallel_chunks(0, alphas.size(), chunks, [&](std::size_t lo, std::size_t hi, std::size_t s) {
    Slot& slot = slots[s];
    for (std::size_t ai = lo; ai < hi; ++ai) {
      const long a = alphas[ai];
      const long room = H - std::labs(a);
      for (long b = -room; b <= room; ++b) {
        Enclosure e = BigInt(a) * ef + BigInt(b) * eg;
        Rational lb = e.magnitude_lower_bound();
        ++slot.pairs;
        if (!slot.min_lb || lb < *slot.min_lb) {
          slot.min_lb = lb;
          slot.argmin = {a, b};
        }
        if (lb >= bound) continue;
        const Rational upper = std::max(abs(e.lo), abs(e.hi));
        (upper < bound ? slot.failing : slot.open).emplace_back(a, b);
      }
    }
  });

  Slot all;
  for (auto& s : slots) {
    all.pairs += s.pairs;
    if (s.min_lb && (!all.min_lb || *s.min_lb < *all.min_lb)) {
      all.min_lb = s.min_lb;
      all.argmin = s.argmin;
    }
    all.failing.insert(all.failing.end(), s.failing.begin(), s.failing.end());
    all.open.insert(all.open.end(), s.open.begin(), s.open.end());
  }
  Verdict v = !all.failing.empty() ? Verdict::fail
              : !all.open.empty()  ? Verdict::inconclusive
                                   : Verdict::pass;
  nlohmann::json w = {{"pairs", all.pairs},
                      {"bound", to_string(bound)},
                      {"failing", all.failing},
                      {"inconclusive", all.open}};
  if (all.min_lb) {
    w["min_lower_bound"] = to_string(*all.min_lb);
    w["argmin"] = {all.argmin.first, all.argmin.second};
  }
  rep.add("|alpha f(1/q) + beta g(1/q)| >= q^{-n2}", v, w);
  rep.summary["terms"] = t;
  rep.summary["f_enclosure"] = to_json(ef);
  rep.summary["g_enclosure"] = to_json(eg);
  rep.summary["pairs"] = all.pairs;
  if (all.min_lb) {
    rep.summary["min_lower_bound"] = to_string(*all.min_lb);
    rep.summary["display_only"] = {{"min_lower_bound", display(*all.min_lb)}};
  }
  return rep;
}

// --------------------------------------------------------- degree criterion

nlohmann::json DegreeInstance::to_json() const {
  return {{"ell", ell}, {"q", q},   {"J", to_string(J)}, {"E", to_string(E)},
          {"N", N},     {"K1", K1}, {"K2", K2},          {"n1", n1},
          {"n2", n2}};
}

Rational certifiable_J_supremum(unsigned long q, const Rational& E, std::uint64_t N,
                                std::uint64_t K1, std::uint64_t K2) {
  if (E <= 0 || N == 0) throw Error("E and N must be positive");
  return std::min(qpow(q, K1) / E, qpow(q, K2) / Rational(from_u64(N)));
}

Report verify_degree_criterion(const DegreeInstance& d,
                               std::shared_ptr<const RepTable> lower,
                               std::shared_ptr<const RepTable> full,
                               std::optional<std::uint64_t> tail_span) {
  Report rep;
  rep.certificate = d.to_json();
  const bool tables_ok = lower && full &&
                         lower->params() == WaringParams{d.ell, d.ell - 1} &&
                         full->params() == WaringParams{d.ell, d.ell};
  rep.add_invariant("tables are r_{ell,ell-1} and r_{ell,ell}", tables_ok);
  rep.add_invariant("q >= 2, E > 0, J > 0, N > 0", d.q >= 2 && d.E > 0 && d.J > 0 && d.N > 0);
  rep.add_invariant("K1 >= 1", d.K1 >= 1);
  const std::uint64_t reach = d.n2 + d.K2;
  const bool covered = tables_ok && reach > 0 && lower->covers(reach - 1) &&
                       full->covers(reach - 1);
  rep.add_invariant("tables cover [0, n2+K2)", covered);
  if (!tables_ok || !covered || d.q < 2 || d.E <= 0 || d.J <= 0 || d.N == 0 || d.K1 == 0)
    return rep;

  const HalfFunction f = HalfFunction::from_table(full);
  auto [v1, w1] = mild_gap_check(f, d.n1, d.K1, d.E, tail_span);
  auto [v2, w2] = mild_gap_check(f, d.n2, d.K1, d.E, tail_span);
  rep.add("n1 in MildGap(f_{ell,ell}; K1, E)", v1, w1);
  rep.add("n2 in MildGap(f_{ell,ell}; K1, E)", v2, w2);

  rep.check("(i)", d.K1 <= d.K2 && d.n1 + d.K1 < d.n2 && d.n2 + d.K2 <= d.N,
            {{"K1 <= K2", d.K1 <= d.K2},
             {"n1 + K1 < n2", d.n1 + d.K1 < d.n2},
             {"n2 + K2 <= N", d.n2 + d.K2 <= d.N}});

  std::optional<std::uint64_t> bad;
  for (std::uint64_t n = d.n1; n < reach && !bad; ++n)
    if ((*lower)[n] != 0) bad = n;
  nlohmann::json w_ii = {{"range", {d.n1, reach}}};
  if (bad) {
    w_ii["n"] = *bad;
    w_ii["r_{ell,ell-1}(n)"] = (*lower)[*bad];
  }
  rep.check("(ii)", !bad, w_ii);

  std::optional<std::uint64_t> n3;
  for (std::uint64_t n = d.n1; n < d.n2 && !n3; ++n)
    if ((*full)[n] > 0) n3 = n;
  rep.check("(iii)", n3.has_value(),
            n3 ? nlohmann::json{{"n3", *n3}, {"r_{ell,ell}(n3)", (*full)[*n3]}}
               : nlohmann::json{{"range", {d.n1, d.n2}}});

  const Rational qK1 = qpow(d.q, d.K1), qK2 = qpow(d.q, d.K2);
  const Rational JE = d.J * d.E, JN = d.J * Rational(from_u64(d.N));
  rep.check("(iv)", qK1 > JE && qK2 > JN,
            {{"q^K1 > J E", qK1 > JE},
             {"q^K2 > J N", qK2 > JN},
             {"q^K1", to_string(qK1)},
             {"J E", to_string(JE)},
             {"q^K2", to_string(qK2)},
             {"J N", to_string(JN)}});

  const Rational sup = certifiable_J_supremum(d.q, d.E, d.N, d.K1, d.K2);
  rep.summary["certifiable_J_supremum"] = to_string(sup);
  // Largest integer J strictly below the supremum.
  BigInt floor_sup = sup.get_num() / sup.get_den();
  if (Rational(floor_sup) == sup) floor_sup -= 1;
  rep.summary["largest_integer_J"] = floor_sup.get_str();
  rep.summary["K_prime"] = d.n2 - d.n1 + d.K2;
  rep.summary["display_only"] = {{"certifiable_J_supremum", display(sup)}};
  return rep;
}

std::optional<DegreeInstance> find_degree_instance(
    unsigned ell, unsigned long q, const Rational& E, std::uint64_t K1, std::uint64_t N,
    std::shared_ptr<const RepTable> lower, std::shared_ptr<const RepTable> full,
    std::optional<std::uint64_t> tail_span) {
  if (!lower || !full) throw Error("null table");
  if (lower->params() != WaringParams{ell, ell - 1} || full->params() != WaringParams{ell, ell})
    throw Error("tables must be r_{ell,ell-1} and r_{ell,ell}");
  if (K1 == 0 || N <= K1) throw Error("need 1 <= K1 < N");
  const std::uint64_t top = std::min<std::uint64_t>(N, lower->limit() + 1);
  const HalfFunction f = HalfFunction::from_table(full);
  const MildGapScan scan = scan_mild_gaps(f, 1, std::min<std::uint64_t>(top, full->limit() + 1) - K1,
                                          K1, E, tail_span);

  std::optional<DegreeInstance> best;
  Rational best_sup;
  std::size_t w = 0;
  for (const GapRun& run : find_gap_runs(*lower, 1)) {
    const std::uint64_t end = std::min<std::uint64_t>(run.start + run.length, top);
    while (w < scan.witnesses.size() && scan.witnesses[w].n < run.start) ++w;
    if (w == scan.witnesses.size()) break;
    const std::uint64_t n1 = scan.witnesses[w].n;
    if (n1 >= end) continue;
    // Earliest n1 in the run admits the earliest n2, hence the longest K2.
    auto nz = full->counts().begin() + static_cast<std::ptrdiff_t>(n1);
    auto first = std::find_if(nz, full->counts().end(), [](std::uint64_t v) { return v != 0; });
    const std::uint64_t n3 = static_cast<std::uint64_t>(first - full->counts().begin());
    const std::uint64_t after = std::max(n1 + K1, n3);
    for (std::size_t x = w; x < scan.witnesses.size(); ++x) {
      const std::uint64_t n2 = scan.witnesses[x].n;
      if (n2 >= end) break;
      if (n2 <= after) continue;
      const std::uint64_t K2 = end - n2;
      if (K2 < K1) break;
      const Rational sup = certifiable_J_supremum(q, E, N, K1, K2);
      if (!best || sup > best_sup) {
        best = DegreeInstance{ell, q, 0, E, N, K1, K2, n1, n2};
        best_sup = sup;
      }
      break;
    }
  }
  return best;
}

NestedGapsCertificate nested_from_degree(const DegreeInstance& d,
                                         const std::vector<BigInt>& alphas,
                                         TableCache& cache, std::uint64_t limit) {
  if (alphas.size() != d.ell) throw Error("need alpha_0 .. alpha_{ell-1}");
  BigInt top = 0;
  for (const auto& a : alphas) top = std::max(top, BigInt(abs(a)));
  if (top == 0) throw Error("g would be identically zero");
  std::vector<HalfFunction> terms;
  for (unsigned j = 0; j < d.ell; ++j) terms.push_back(theta_power(cache, d.ell, j, limit));

  const Rational c(BigInt(d.ell) * (BigInt(1) << d.ell) * top);
  NestedGapsCertificate n;
  n.q = d.q;
  n.H = d.J / (8 * c);
  n.K1 = d.K1;
  n.K2 = d.K2;
  n.K_prime = d.n2 - d.n1 + d.K2;
  n.n_prime = d.n1;
  n.n1 = d.n1;
  n.n2 = d.n2;
  n.E = d.E;
  n.E_prime = 8 * c * Rational(from_u64(d.N));
  n.f = theta_power(cache, d.ell, d.ell, limit);
  n.g = linear_combination(alphas, terms);
  return n;
}

// --------------------------------------------------------- linear forms

LinearForm LinearForm::make(std::vector<BigInt> coefficients, BigInt height) {
  for (const auto& a : coefficients)
    if (abs(a) > height) throw Error("coefficient exceeds the declared height");
  return {std::move(coefficients), std::move(height)};
}

std::vector<Enclosure> theta_power_enclosures(unsigned ell, unsigned long q,
                                              std::uint64_t terms, TableCache& cache) {
  const std::uint64_t limit = 2 * terms + 64;
  std::vector<Enclosure> out;
  for (unsigned j = 0; j <= ell; ++j)
    out.push_back(eval_enclosure(theta_power(cache, ell, j, limit), q, terms));
  return out;
}

Enclosure evaluate_linear_form(const LinearForm& form, const std::vector<Enclosure>& powers) {
  if (form.coefficients.size() != powers.size())
    throw Error("form and power enclosures differ in length");
  if (form.coefficients.empty() || form.coefficients.back() == 0)
    throw Error("the leading coefficient alpha_ell must be nonzero");
  Enclosure sum = Enclosure::exact(0);
  for (std::size_t j = 0; j < powers.size(); ++j)
    if (form.coefficients[j] != 0) sum = sum + form.coefficients[j] * powers[j];
  return sum;
}

Report check_theta_linear_forms(unsigned ell, unsigned long q, std::uint64_t height,
                                std::uint64_t terms) {
  WaringParams::make(ell, 1);
  if (q < 2) throw Error("q must be at least 2");
  if (height == 0) throw Error("height must be positive");
  Report rep;
  rep.certificate = {{"ell", ell}, {"q", q}, {"height", height}, {"terms", terms}};

  TableCache cache;
  const auto powers = theta_power_enclosures(ell, q, terms, cache);
  nlohmann::json encl = nlohmann::json::array();
  for (const auto& e : powers) encl.push_back(to_json(e));
  rep.summary["theta_power_enclosures"] = encl;

  // Interval powers of the theta enclosure must meet the direct enclosures.
  nlohmann::json cross = nlohmann::json::array();
  bool cross_ok = true;
  for (unsigned j = 0; j <= ell; ++j) {
    const bool meets = pow(powers[1], j).intersects(powers[j]);
    cross_ok = cross_ok && meets;
    cross.push_back({{"j", j}, {"intersects", meets}});
  }
  rep.check("interval powers meet direct series enclosures", cross_ok, cross);

  const long h = static_cast<long>(height);
  const std::uint64_t base = 2 * height + 1;
  std::uint64_t total = 1;
  for (unsigned j = 0; j <= ell; ++j) total *= base;

  struct Slot {
    std::uint64_t forms = 0;
    std::optional<Rational> min_lb;
    std::vector<long> argmin;
    std::vector<std::vector<long>> open;
  };
  const std::size_t chunks = default_chunks(total);
  std::vector<Slot> slots(chunks);
  parallel_chunks(0, total, chunks, [&](std::size_t lo, std::size_t hi, std::size_t s) {
    Slot& slot = slots[s];
    std::vector<long> digits(ell + 1);
    std::vector<BigInt> coeffs(ell + 1);
    for (std::size_t idx = lo; idx < hi; ++idx) {
      // Lexicographic in (alpha_0, ..., alpha_ell), each from -h to h.
      std::uint64_t rest = idx;
      for (int j = static_cast<int>(ell); j >= 0; --j) {
        digits[j] = static_cast<long>(rest % base) - h;
        rest /= base;
      }
      if (digits[ell] == 0) continue;
      for (unsigned j = 0; j <= ell; ++j) coeffs[j] = digits[j];
      const Enclosure e = evaluate_linear_form(LinearForm{coeffs, BigInt(h)}, powers);
      ++slot.forms;
      if (!e.excludes_zero()) {
        slot.open.push_back(digits);
        continue;
      }
      Rational lb = e.magnitude_lower_bound();
      if (!slot.min_lb || lb < *slot.min_lb) {
        slot.min_lb = lb;
        slot.argmin = digits;
      }
    }
  });
  Slot all;
  for (auto& s : slots) {
    all.forms += s.forms;
    if (s.min_lb && (!all.min_lb || *s.min_lb < *all.min_lb)) {
      all.min_lb = s.min_lb;
      all.argmin = s.argmin;
    }
    all.open.insert(all.open.end(), s.open.begin(), s.open.end());
  }
  nlohmann::json w = {{"forms", all.forms}, {"inconclusive", all.open}};
  if (all.min_lb) {
    w["L_min"] = to_string(*all.min_lb);
    w["argmin"] = all.argmin;
  }
  rep.add("every form with alpha_ell != 0 is certified nonzero",
          all.open.empty() ? Verdict::pass : Verdict::inconclusive, w);
  rep.summary["forms"] = all.forms;
  rep.summary["inconclusive_forms"] = all.open.size();
  if (all.min_lb) {
    rep.summary["L_min"] = to_string(*all.min_lb);
    rep.summary["display_only"] = {{"L_min", display(*all.min_lb)}};
  }
  return rep;
}

// ---------------------------------------------------------------- pipeline

Rational schedule_alpha(std::uint64_t K1, std::uint64_t K2, const Rational& xi) {
  if (K1 == 0 || K2 < K1) throw Error("schedule needs 1 <= K1 <= K2");
  Rational alpha = Rational(1, 2);  // K1 terms of (1/(2 K1)) / (0 + 1)
  alpha.canonicalize();
  Rational growth = 12 * xi;
  for (std::uint64_t k = 0; k <= K2 - K1; ++k) {
    const BigInt Ek = growth.get_num() / growth.get_den();
    alpha += xi / Rational(Ek + 1);
    growth *= Rational(3, 2);
  }
  return alpha;
}

PipelineConfig PipelineConfig::resolved() const {
  PipelineConfig c = *this;
  WaringParams::make(c.ell, 1);
  if (c.sigma == 0) c.sigma = c.ell == 3 ? make_rational(13, 4) : make_rational(201, 50);
  if (c.xi == 0) c.xi = make_rational(32, 3);
  if (c.pool.empty())
    c.pool = c.ell == 3 ? std::vector<std::uint64_t>{2, 7, 9}
                        : std::vector<std::uint64_t>{3, 5, 16};
  if (c.product_bound == 0) c.product_bound = c.max_M;
  return c;
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json j = {{"ell", ell},
                      {"q", q},
                      {"J", to_string(J)},
                      {"sigma", to_string(sigma)},
                      {"xi", to_string(xi)},
                      {"K1", K1},
                      {"pool", pool},
                      {"product_bound", product_bound},
                      {"require_even", require_even},
                      {"max_M", max_M},
                      {"max_N", max_N},
                      {"max_sieve", max_sieve}};
  if (tail_span) j["tail_span"] = *tail_span;
  return j;
}

Report pipeline_dry_run(const PipelineConfig& input) {
  const PipelineConfig cfg = input.resolved();
  const unsigned ell = cfg.ell;
  Report rep;
  rep.certificate = cfg.to_json();
  auto stop = [&](const std::string& why) {
    rep.summary["completed"] = false;
    rep.summary["stopped_at"] = why;
    return rep;
  };

  // Step 1: sigma in (ell, 27/8) or (ell, 16384/4059).
  const Rational sigma_top = ell == 3 ? make_rational(27, 8) : make_rational(16384, 4059);
  rep.check("sigma in (ell, sigma_max)", cfg.sigma > ell && cfg.sigma < sigma_top,
            {{"sigma", to_string(cfg.sigma)}, {"sigma_max", to_string(sigma_top)}});

  // Step 2: modulus search standing in for the analytic construction.
  std::vector<std::uint64_t> pool;
  nlohmann::json dropped = nlohmann::json::array();
  for (auto M : cfg.pool) (M <= cfg.max_M ? pool.push_back(M) : dropped.push_back(M));
  if (!dropped.empty())
    rep.add("pool within max_M", Verdict::fail, {{"dropped", dropped}});
  if (pool.empty()) return stop("empty moduli pool");
  ModulusSearchOptions opts;
  opts.product_bound = std::min(cfg.product_bound, cfg.max_M);
  opts.require_small_start = true;
  opts.require_even = cfg.require_even;
  auto found = search_gap_modulus(ell, cfg.K1, pool, opts);
  rep.check("modulus with r(m+k, M) <= M^{ell-1}/(2 K1) for k < K1", found.has_value(),
            found ? to_json(*found) : nlohmann::json{{"candidates", candidate_moduli(pool, opts)}});
  if (!found) return stop("no modulus meets the window condition");
  const std::uint64_t M = found->modulus, m = found->start;
  rep.check("max{2m, 4 K1} < M", std::max(2 * m, 4 * cfg.K1) < M,
            {{"m", m}, {"K1", cfg.K1}, {"M", M}});
  rep.check("M even", M % 2 == 0, {{"M", M}});
  rep.check("r(m', M) <= xi M^{ell-1} for all m'", found->global_quality <= cfg.xi,
            {{"global_quality", to_string(found->global_quality)}, {"xi", to_string(cfg.xi)}});

  // Step 3: N = floor(M^sigma), K2 = floor(M/2).
  const BigInt M_ell = pow(from_u64(M), ell);
  if (M_ell > from_u64(cfg.max_N)) {
    rep.add("N >= M^ell", Verdict::fail,
            {{"unsatisfiable", true}, {"M^ell", M_ell.get_str()}, {"max_N", cfg.max_N}});
    return stop("max_N < M^ell");
  }
  const BigInt N_exact =
      floor_power(from_u64(M), cfg.sigma.get_num().get_ui(), cfg.sigma.get_den().get_ui());
  if (N_exact > from_u64(cfg.max_N)) {
    rep.add("N = floor(M^sigma) within max_N", Verdict::fail,
            {{"N", N_exact.get_str()}, {"max_N", cfg.max_N}});
    return stop("floor(M^sigma) exceeds max_N");
  }
  const std::uint64_t N = to_u64(N_exact);
  rep.check("N >= M^ell", N_exact >= M_ell, {{"N", N}, {"M^ell", M_ell.get_str()}});
  const std::uint64_t K1 = cfg.K1, K2 = M / 2;
  rep.check("K2 = floor(M/2) > 2 K1", K2 > 2 * K1, {{"K2", K2}, {"K1", K1}});
  if (K2 < K1) return stop("K2 < K1");
  rep.check("m + K2 < M", m + K2 < M, {{"m", m}, {"K2", K2}, {"M", M}});

  // Step 4: the eps/E schedule and alpha.
  std::vector<Rational> eps;
  std::vector<std::uint64_t> bigE;
  for (std::uint64_t k = 0; k < K1; ++k) {
    eps.push_back(make_rational(BigInt(1), 2 * from_u64(K1)));
    bigE.push_back(0);
  }
  Rational growth = 12 * cfg.xi;
  for (std::uint64_t k = 0; k <= K2 - K1; ++k) {
    eps.push_back(cfg.xi);
    bigE.push_back(to_u64(BigInt(growth.get_num() / growth.get_den())));
    growth *= make_rational(3, 2);
  }
  const Rational alpha = schedule_alpha(K1, K2, cfg.xi);
  rep.check("finite-schedule alpha < 3/4", alpha < make_rational(3, 4),
            {{"alpha", to_string(alpha)}});
  const Rational E = 60 * cfg.xi;
  rep.check("12 xi >= 8 * 2^ell", 12 * cfg.xi >= Rational(8 * (1 << ell)),
            {{"12 xi", to_string(12 * cfg.xi)}});
  rep.summary["alpha"] = to_string(alpha);
  rep.summary["display_only"]["alpha"] = display(alpha);

  // Step 5: sieves.
  const std::uint64_t span = cfg.tail_span.value_or(default_tail_span(K1));
  const std::uint64_t limit = N + K1 + span;
  if (limit > cfg.max_sieve) {
    rep.add("sieve size within max_sieve", Verdict::fail,
            {{"needed", limit}, {"max_sieve", cfg.max_sieve}});
    return stop("sieve exceeds max_sieve");
  }
  TableCache cache;
  auto full = cache.get(ell, ell, limit);
  auto lower = cache.get(ell, ell - 1, limit);

  // Step 6: the set B from Maier counting.
  const MaierCertificate cert = MaierCertificate::make(ell, K2, M, m, eps, bigE, N);
  const Report maier = verify_maier(cert, *full, residue_counts(ell, M));
  for (const auto& c : maier.conditions())
    rep.add("maier: " + c.name, c.verdict, c.witness);
  const auto B = maier_members(cert, *full);
  const Rational NM = make_rational(from_u64(N), from_u64(M));
  rep.check("#B >= N / (2^{ell+2} M)", Rational(from_u64(B.size())) >= NM / (1 << (ell + 2)),
            {{"#B", B.size()}, {"bound", to_string(NM / (1 << (ell + 2)))}});
  rep.check("Lemma 4.2 lengths: K2 - K1 >= K1 >= log2 N",
            K2 - K1 >= K1 && pow(BigInt(2), K1) >= from_u64(N),
            {{"K2 - K1", K2 - K1}, {"K1", K1}, {"N", N}});

  // Step 7: B inside MildGap(f_{ell,ell}; K1, E).
  const HalfFunction f = HalfFunction::from_table(full);
  std::uint64_t mild = 0, rejected = 0, open = 0;
  for (auto b : B) {
    const auto v = is_mild_gap(f, b, K1, E, cfg.tail_span);
    (v.outcome == MildGapOutcome::witness        ? mild
     : v.outcome == MildGapOutcome::inconclusive ? open
                                                 : rejected)++;
  }
  rep.add("B subset of MildGap(f_{ell,ell}; K1, 60 xi)",
          rejected ? Verdict::fail : open ? Verdict::inconclusive : Verdict::pass,
          {{"mild", mild}, {"rejected", rejected}, {"inconclusive", open}, {"E", to_string(E)}});

  // Step 8: B_bad and B_good (the last element has no successor to pair with).
  std::vector<std::uint64_t> good;
  std::uint64_t bad = 0;
  auto lc = lower->counts();
  for (std::size_t i = 0; i + 1 < B.size(); ++i) {
    const std::uint64_t hi = std::min<std::uint64_t>(B[i + 1] + K2, lower->limit());
    bool hit = false;
    for (std::uint64_t n = B[i]; n <= hi && !hit; ++n) hit = lc[n] != 0;
    if (hit) ++bad;
    else good.push_back(B[i]);
  }
  rep.check("#B_bad < #B / 2", 2 * bad < B.size(), {{"#B_bad", bad}, {"#B", B.size()}});
  rep.check("#B_good >= N / (2^{ell+3} M)",
            Rational(from_u64(good.size())) >= NM / (1 << (ell + 3)),
            {{"#B_good", good.size()}, {"bound", to_string(NM / (1 << (ell + 3)))}});

  // Step 9: separation.
  auto next_of = [&](std::uint64_t b) {
    return *std::upper_bound(B.begin(), B.end(), b);
  };
  std::uint64_t separated = 0;
  auto fc = full->counts();
  for (auto b : good) {
    const std::uint64_t b2 = next_of(b);
    bool any = false;
    for (std::uint64_t n = b; n < b2 && !any; ++n) any = fc[n] > 0;
    separated += any;
  }
  rep.check("every good pair has r_{ell,ell}(n3) > 0 for some n3 in [n1, n2)",
            separated == good.size(), {{"separated", separated}, {"good_pairs", good.size()}});
  if (ell == 3) {
    // 25 N^{8/27} < M  <=>  25^27 N^8 < M^27
    const bool holds = pow(BigInt(25), 27) * pow(from_u64(N), 8) < pow(from_u64(M), 27);
    rep.check("25 N^{8/27} < M", holds, {{"N", N}, {"M", M}});
  } else {
    const Rational base = make_rational(4059, 16384);
    const Rational eps4 = (1 / cfg.sigma - base) / 2;
    const Rational expo = base + eps4;
    // M/2 > N^{p/q}  <=>  M^q > 2^q N^p
    const unsigned long p = expo.get_num().get_ui(), qd = expo.get_den().get_ui();
    const bool holds = pow(from_u64(M), qd) > pow(BigInt(2), qd) * pow(from_u64(N), p);
    rep.check("M/2 > N^{4059/16384 + eps}", holds,
              {{"eps", to_string(eps4)}, {"N", N}, {"M", M}});
    const ExceptionalSet A_N = scan_exceptional_set(N, eps4, *full);
    std::uint64_t inside = 0, total = 0;
    for (auto b : good) {
      for (std::uint64_t a = b + (M + 1) / 2; a < b + M && a <= N; ++a) {
        ++total;
        inside += std::binary_search(A_N.members.begin(), A_N.members.end(), a);
      }
    }
    rep.check("A not contained in A_N", inside < total,
              {{"#A", total}, {"#(A and A_N)", inside}, {"#A_N", A_N.members.size()},
               {"density_A_N", to_string(A_N.density)}});
  }

  // Step 10: the degree criterion on the first good pair.
  if (good.empty()) {
    rep.add("degree criterion on a good pair", Verdict::fail, {{"reason", "B_good is empty"}});
    return stop("no good pair");
  }
  DegreeInstance inst{ell, cfg.q, cfg.J, E, N, K1, K2, good.front(), next_of(good.front())};
  const Report degree = verify_degree_criterion(inst, lower, full, cfg.tail_span);
  for (const auto& c : degree.conditions())
    rep.add("criterion: " + c.name, c.verdict, c.witness);
  rep.summary["criterion_instance"] = inst.to_json();
  rep.summary["certifiable_J_supremum"] = degree.summary.value("certifiable_J_supremum", "");
  rep.summary["N"] = N;
  rep.summary["M"] = M;
  rep.summary["m"] = m;
  rep.summary["K1"] = K1;
  rep.summary["K2"] = K2;
  rep.summary["E"] = to_string(E);
  rep.summary["#B"] = B.size();
  rep.summary["#B_good"] = good.size();
  rep.summary["completed"] = true;
  return rep;
}

}  // namespace waring_gaps
