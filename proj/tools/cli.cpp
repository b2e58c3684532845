#include "cli.hpp"

#include "waring_gaps/certify.hpp"
#include "waring_gaps/parallel.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <concepts>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace waring_gaps::cli {
namespace {

using nlohmann::json;

class BoundError : public Error {
 public:
  using Error::Error;
};

std::string text(const std::string& v) { return v; }
std::string text(bool v) { return v ? "true" : "false"; }
template <std::integral T>
std::string text(T v) {
  return std::to_string(v);
}
template <class T>
std::string text(const std::vector<T>& v) {
  std::string out;
  for (const auto& x : v) out += (out.empty() ? "" : ",") + text(x);
  return out;
}

struct Bounds {
  std::uint64_t max_limit = 20'000'000;
  std::uint64_t max_modulus = 20'000;
  std::uint64_t max_height = 20;
  std::uint64_t max_terms = 100'000;

  json to_json() const {
    return {{"max-limit", max_limit},
            {"max-modulus", max_modulus},
            {"max-height", max_height},
            {"max-terms", max_terms}};
  }
};

void require_within(const char* what, std::uint64_t value, const char* bound,
                    std::uint64_t cap) {
  if (value > cap)
    throw BoundError(std::string(what) + " = " + std::to_string(value) + " exceeds --" +
                     bound + " = " + std::to_string(cap));
}

// One subcommand: its CLI11 node, the parameters it echoes, and its action.
class Command {
 public:
  Command(CLI::App& app, const std::string& name, const std::string& description)
      : app_(app.add_subcommand(name, description)) {}

  template <class T>
  CLI::Option* option(const std::string& name, T& var, const std::string& description) {
    params_.emplace_back(name, [&var] { return text(var); });
    auto* o = app_->add_option("--" + name, var, description);
    if constexpr (requires { var.begin(); } && !std::same_as<T, std::string>)
      o->delimiter(',');
    return o;
  }

  void flag(const std::string& name, bool& var, const std::string& description) {
    params_.emplace_back(name, [&var] { return text(var); });
    app_->add_flag("--" + name + ",!--no-" + name, var, description);
  }

  json params() const {
    json j = json::object();
    for (const auto& [name, get] : params_) j[name] = get();
    return j;
  }

  CLI::App* app() const { return app_; }
  std::function<Report()> action;

 private:
  CLI::App* app_;
  std::vector<std::pair<std::string, std::function<std::string()>>> params_;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error("'" + path + "' is not valid JSON: " + e.what());
  }
}

// Accepts either a bare certificate or a report that embeds one.
json certificate_from(const std::string& path) {
  json j = read_json(path);
  return j.contains("certificate") ? j.at("certificate") : j;
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& fill,
                bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error("cannot write '" + path + "'");
  fill(out);
  if (!out) throw Error("failed writing '" + path + "'");
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::optional<std::uint64_t> positive_or_none(std::uint64_t v) {
  return v ? std::optional<std::uint64_t>(v) : std::nullopt;
}

std::string decimal(const Rational& r) {
  std::ostringstream out;
  out.precision(17);
  out << r.get_d();
  return out.str();
}

// Overrides applied on top of a loaded or synthetic nested gaps certificate.
struct NestedOverrides {
  std::string q, H, K1, K2, K_prime, n_prime, n1, n2, E, E_prime;

  void add_to(Command& c) {
    c.option("q", q, "base q >= 2");
    c.option("H", H, "height bound (rational)");
    c.option("K1", K1, "inner gap length");
    c.option("K2", K2, "second gap length");
    c.option("K-prime", K_prime, "outer gap length of g");
    c.option("n-prime", n_prime, "outer gap start");
    c.option("n1", n1, "first mild gap point");
    c.option("n2", n2, "second mild gap point");
    c.option("E", E, "tail bound for f (rational)");
    c.option("E-prime", E_prime, "tail bound for g (rational)");
  }

  void apply(NestedGapsCertificate& c) const {
    auto u = [](const std::string& s, auto& field) {
      if (!s.empty()) field = to_u64(parse_bigint(s));
    };
    u(q, c.q);
    u(K1, c.K1);
    u(K2, c.K2);
    u(K_prime, c.K_prime);
    u(n_prime, c.n_prime);
    u(n1, c.n1);
    u(n2, c.n2);
    if (!H.empty()) c.H = parse_rational(H);
    if (!E.empty()) c.E = parse_rational(E);
    if (!E_prime.empty()) c.E_prime = parse_rational(E_prime);
  }
};

// All option storage for one invocation.
struct State {
  Bounds bounds;
  unsigned threads = 0;
  std::string config, report, replay;
  TableCache cache;

  std::shared_ptr<const RepTable> table(unsigned ell, unsigned s, std::uint64_t limit) {
    require_within("table limit", limit, "max-limit", bounds.max_limit);
    return cache.get(ell, s, limit);
  }

  std::shared_ptr<const RepTable> load_or_sieve(const std::string& path, unsigned ell,
                                                unsigned s, std::uint64_t limit) {
    if (path.empty()) return table(ell, s, limit);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open table '" + path + "'");
    return std::make_shared<const RepTable>(read_binary(in));
  }

  // sieve
  unsigned sv_ell = 3, sv_s = 3, sv_width = 0;
  std::uint64_t sv_limit = 1000;
  std::string sv_out;
  // gaps
  std::string gp_table, gp_out;
  unsigned gp_ell = 3, gp_s = 3;
  std::uint64_t gp_limit = 1000, gp_min = 1;
  // greedy
  unsigned gr_ell = 3;
  std::uint64_t gr_from = 1, gr_to = 1000;
  std::string gr_out;
  // modcount
  unsigned mc_ell = 3;
  std::uint64_t mc_modulus = 9;
  std::string mc_out;
  // crt
  unsigned crt_ell = 3;
  std::uint64_t crt_m1 = 2, crt_m2 = 9;
  std::string crt_out;
  // modsearch
  unsigned ms_ell = 3;
  std::uint64_t ms_K1 = 2, ms_product = 0, ms_reserve = 0;
  std::vector<std::uint64_t> ms_pool{2, 7, 9};
  bool ms_small = false, ms_even = false;
  // mild-scan
  std::string mg_function, mg_E = "2", mg_out;
  unsigned mg_ell = 3, mg_s = 3;
  std::uint64_t mg_limit = 1000, mg_lo = 0, mg_hi = 0, mg_K = 1, mg_span = 0;
  // theta
  std::string th_function;
  unsigned th_ell = 3, th_s = 1;
  std::uint64_t th_q = 2, th_terms = 64;
  // maier
  std::string mr_cert;
  unsigned mr_ell = 3;
  std::uint64_t mr_K = 1, mr_M = 9, mr_m = 4, mr_N = 729, mr_k = 0, mr_L = 1;
  std::vector<std::string> mr_eps{"1/100", "1/100"};
  std::vector<std::uint64_t> mr_E{0, 0};
  bool mr_inner = false;
  // nested and measure
  std::string ng_cert;
  bool ng_synthetic = false, ng_degree = false, ng_search = false;
  NestedOverrides ng_over;
  unsigned ng_ell = 3;
  std::string ng_J = "1", ng_emit;
  std::uint64_t ng_N = 0, ng_span = 0;
  std::string ms_cert;
  bool ms_synthetic = false;
  NestedOverrides ms_over;
  std::uint64_t ms_terms = 0;
  // linforms
  unsigned lf_ell = 3;
  std::uint64_t lf_q = 2, lf_height = 1, lf_terms = 64;
  // pipeline
  unsigned pl_ell = 3;
  std::uint64_t pl_q = 2, pl_K1 = 2, pl_product = 0, pl_max_M = 200,
                pl_max_N = 2'000'000, pl_max_sieve = 4'000'000, pl_span = 0;
  std::string pl_J = "1", pl_sigma, pl_xi;
  std::vector<std::uint64_t> pl_pool;
  bool pl_even = true;
  // exceptional
  std::uint64_t ex_limit = 10'000;
  std::string ex_epsilon = "0", ex_out;
};

NestedGapsCertificate load_nested(State& st, const std::string& path, bool synthetic,
                                  const NestedOverrides& over) {
  if (path.empty() == !synthetic)
    throw Error("give exactly one of --cert and --synthetic");
  NestedGapsCertificate c = synthetic ? synthetic_nested_certificate()
                                      : NestedGapsCertificate::from_json(
                                            certificate_from(path), st.cache);
  over.apply(c);
  return c;
}

Report run_sieve(State& st) {
  const auto params = WaringParams::make(st.sv_ell, st.sv_s);
  auto t = st.table(st.sv_ell, st.sv_s, st.sv_limit);
  if (st.sv_width != 0)
    t = std::make_shared<const RepTable>(
        params, t->limit(), std::vector<std::uint64_t>(t->counts().begin(), t->counts().end()),
        st.sv_width);
  Report rep;
  rep.certificate = {{"ell", st.sv_ell}, {"s", st.sv_s}, {"limit", st.sv_limit}};
  auto counts = t->counts();
  std::optional<std::uint64_t> violation;
  std::uint64_t zeros = 0, top = 0, argmax = 0;
  for (std::uint64_t n = 0; n < counts.size(); ++n) {
    if (!violation && counts[n] > ((n + 1) << st.sv_ell)) violation = n;
    zeros += counts[n] == 0;
    if (counts[n] > top) top = counts[n], argmax = n;
  }
  rep.add_invariant("r(n) <= 2^ell (n+1)", !violation,
                    violation ? json{{"n", *violation}} : json::object());
  rep.summary = {{"limit", t->limit()},  {"byte_width", t->byte_width()},
                 {"zeros", zeros},       {"max_count", top},
                 {"argmax", argmax}};
  if (!st.sv_out.empty()) {
    const bool csv = ends_with(st.sv_out, ".csv");
    write_file(st.sv_out, [&](std::ostream& o) { csv ? write_csv(*t, o) : write_binary(*t, o); },
               !csv);
    rep.summary["out"] = st.sv_out;
    rep.summary["format"] = csv ? "csv" : "WRT1";
  }
  return rep;
}

Report run_gaps(State& st) {
  auto t = st.load_or_sieve(st.gp_table, st.gp_ell, st.gp_s, st.gp_limit);
  const auto runs = find_gap_runs(*t, st.gp_min);
  Report rep;
  rep.certificate = {{"ell", t->params().ell}, {"s", t->params().s},
                     {"limit", t->limit()},    {"min_length", st.gp_min}};
  json rows = json::array();
  const GapRun* longest = nullptr;
  for (const auto& r : runs) {
    if (!longest || r.length > longest->length) longest = &r;
    rows.push_back({{"start", r.start}, {"length", r.length},
                    {"boundary_truncated", r.boundary_truncated}});
  }
  rep.summary["runs"] = runs.size();
  if (longest)
    rep.summary["longest"] = {{"start", longest->start}, {"length", longest->length}};
  if (st.gp_out.empty()) {
    rep.summary["rows"] = rows;
  } else {
    write_file(st.gp_out, [&](std::ostream& o) {
      o << "start,length,boundary_truncated\n";
      for (const auto& r : runs)
        o << r.start << ',' << r.length << ',' << (r.boundary_truncated ? 1 : 0) << '\n';
    });
    rep.summary["out"] = st.gp_out;
  }
  return rep;
}

Report run_greedy(State& st) {
  if (st.gr_from == 0 || st.gr_to < st.gr_from) throw Error("need 1 <= from <= to");
  auto t = st.table(st.gr_ell, st.gr_ell, st.gr_to);
  const std::uint64_t count = st.gr_to - st.gr_from + 1;
  std::vector<GreedyDecomposition> dec(count);
  std::vector<char> bound_ok(count, 1);
  parallel_chunks(0, count, default_chunks(count), [&](std::size_t lo, std::size_t hi, std::size_t) {
    for (std::size_t i = lo; i < hi; ++i) {
      dec[i] = greedy_decompose(st.gr_ell, st.gr_from + i);
      if (st.gr_ell == 3) bound_ok[i] = greedy_bound_holds(st.gr_from + i, dec[i].n);
    }
  });
  json bound_fail = json::array(), rep_fail = json::array();
  for (std::uint64_t i = 0; i < count; ++i) {
    if (!bound_ok[i]) bound_fail.push_back(st.gr_from + i);
    if ((*t)[dec[i].n] == 0) rep_fail.push_back(st.gr_from + i);
  }
  Report rep;
  rep.certificate = {{"ell", st.gr_ell}, {"from", st.gr_from}, {"to", st.gr_to}};
  if (st.gr_ell == 3)
    rep.check("(b-n)^27 < 25^27 b^8", bound_fail.empty(), {{"failures", bound_fail}});
  rep.check("r_{ell,ell}(n) > 0", rep_fail.empty(), {{"failures", rep_fail}});
  rep.summary["checked"] = count;
  if (!st.gr_out.empty()) {
    write_file(st.gr_out, [&](std::ostream& o) {
      o << "b,n,parts\n";
      for (std::uint64_t i = 0; i < count; ++i) {
        o << st.gr_from + i << ',' << dec[i].n << ',';
        for (std::size_t j = 0; j < dec[i].parts.size(); ++j)
          o << (j ? " " : "") << dec[i].parts[j];
        o << '\n';
      }
    });
    rep.summary["out"] = st.gr_out;
  }
  return rep;
}

json profile_values(const ResidueProfile& p) {
  json r = json::array();
  for (const auto& v : p.r) r.push_back(v.get_str());
  return r;
}

json zero_residues(const ResidueProfile& p) {
  json z = json::array();
  for (std::size_t m = 0; m < p.r.size(); ++m)
    if (p.r[m] == 0) z.push_back(m);
  return z;
}

Report run_modcount(State& st) {
  require_within("modulus", st.mc_modulus, "max-modulus", st.bounds.max_modulus);
  const auto p = residue_counts(st.mc_ell, st.mc_modulus);
  Report rep;
  rep.certificate = {{"ell", st.mc_ell}, {"M", st.mc_modulus}};
  const BigInt total = pow(from_u64(st.mc_modulus), st.mc_ell);
  rep.add_invariant("sum_m r(m, M) = M^ell", p.mass() == total,
                    {{"mass", p.mass().get_str()}, {"M^ell", total.get_str()}});
  rep.summary = {{"zeros", zero_residues(p)}, {"r", profile_values(p)}};
  if (!st.mc_out.empty()) {
    write_file(st.mc_out, [&](std::ostream& o) { write_csv(p, o); });
    rep.summary["out"] = st.mc_out;
  }
  return rep;
}

Report run_crt(State& st) {
  require_within("M1 M2", st.crt_m1 * st.crt_m2, "max-modulus", st.bounds.max_modulus);
  const auto combined = crt_combine(residue_counts(st.crt_ell, st.crt_m1),
                                    residue_counts(st.crt_ell, st.crt_m2));
  const auto direct = residue_counts(st.crt_ell, st.crt_m1 * st.crt_m2);
  Report rep;
  rep.certificate = {{"ell", st.crt_ell}, {"M1", st.crt_m1}, {"M2", st.crt_m2}};
  json diff = json::array();
  for (std::size_t m = 0; m < direct.r.size(); ++m)
    if (combined.r[m] != direct.r[m]) diff.push_back(m);
  rep.check("crt_combine equals residue_counts(M1 M2)", diff.empty(), {{"mismatches", diff}});
  rep.summary = {{"M", combined.modulus}, {"zeros", zero_residues(combined)}};
  if (!st.crt_out.empty()) {
    write_file(st.crt_out, [&](std::ostream& o) { write_csv(combined, o); });
    rep.summary["out"] = st.crt_out;
  }
  return rep;
}

Report run_modsearch(State& st) {
  ModulusSearchOptions opts;
  opts.product_bound = st.ms_product;
  opts.require_small_start = st.ms_small;
  opts.require_even = st.ms_even;
  opts.reserve = st.ms_reserve;
  const auto candidates = candidate_moduli(st.ms_pool, opts);
  if (!candidates.empty())
    require_within("candidate modulus", candidates.back(), "max-modulus", st.bounds.max_modulus);
  const auto best = search_gap_modulus(st.ms_ell, st.ms_K1, st.ms_pool, opts);
  Report rep;
  rep.certificate = {{"ell", st.ms_ell}, {"K1", st.ms_K1}, {"pool", st.ms_pool}};
  rep.check("some M has r(m+k, M) <= M^{ell-1}/(2 K1) for all k < K1", best.has_value(),
            best ? to_json(*best) : json{{"candidates", candidates}});
  rep.summary["candidates"] = candidates;
  if (best) rep.summary["best"] = to_json(*best);
  return rep;
}

Report run_mild_scan(State& st) {
  const HalfFunction f = st.mg_function.empty()
                             ? theta_power(st.cache, st.mg_ell, st.mg_s,
                                           (require_within("table limit", st.mg_limit,
                                                           "max-limit", st.bounds.max_limit),
                                            st.mg_limit))
                             : function_from_json(read_json(st.mg_function), st.cache);
  const Rational E = parse_rational(st.mg_E);
  std::uint64_t hi = st.mg_hi;
  if (auto cov = f.coverage()) hi = hi ? std::min(hi, *cov + 1) : *cov + 1;
  if (hi == 0) throw Error("--hi is required for functions known at every index");
  const auto scan = scan_mild_gaps(f, st.mg_lo, hi, st.mg_K, E, positive_or_none(st.mg_span));

  Report rep;
  rep.certificate = {{"function", f.describe()}, {"lo", st.mg_lo}, {"hi", hi},
                     {"K", st.mg_K},             {"E", to_string(E)}};
  json unreplayed = json::array();
  for (const auto& w : scan.witnesses)
    if (!replay_witness(f, w)) unreplayed.push_back(w.n);
  rep.add_invariant("witnesses replay from raw coefficients", unreplayed.empty(),
                    {{"failed", unreplayed}});
  rep.summary["mild_points"] = scan.witnesses.size();
  rep.summary["inconclusive"] = scan.inconclusive;
  if (st.mg_out.empty()) {
    json ws = json::array();
    for (const auto& w : scan.witnesses) ws.push_back(to_json(w));
    rep.summary["witnesses"] = ws;
  } else {
    write_file(st.mg_out, [&](std::ostream& o) {
      o << "n,tail_lo,tail_hi\n";
      for (const auto& w : scan.witnesses)
        o << w.n << ',' << to_string(w.tail_enclosure.lo) << ','
          << to_string(w.tail_enclosure.hi) << '\n';
    });
    rep.summary["out"] = st.mg_out;
  }
  return rep;
}

Report run_theta(State& st) {
  require_within("terms", st.th_terms, "max-terms", st.bounds.max_terms);
  const HalfFunction f =
      st.th_function.empty()
          ? theta_power(st.cache, st.th_ell, st.th_s, 2 * st.th_terms + 64)
          : function_from_json(read_json(st.th_function), st.cache);
  const Enclosure e = eval_enclosure(f, st.th_q, st.th_terms);
  Report rep;
  rep.certificate = {{"function", f.describe()}, {"q", st.th_q}, {"terms", st.th_terms}};
  rep.summary = {{"enclosure", to_json(e)},
                 {"truncated", to_string(eval_truncated(f, st.th_q, st.th_terms))},
                 {"width", to_string(e.width())},
                 {"display_only", {{"lo", decimal(e.lo)}, {"hi", decimal(e.hi)}}}};
  return rep;
}

Report run_maier(State& st) {
  if (st.mr_inner) {
    const BigInt I = pow(from_u64(st.mr_L), st.mr_ell) * pow(from_u64(st.mr_M), st.mr_ell - 1);
    if (I == 0) throw Error("L and M must be positive");
    const BigInt last = from_u64(st.mr_m + st.mr_k) + (I - 1) * from_u64(st.mr_M);
    if (last > from_u64(st.bounds.max_limit))
      throw BoundError("table limit " + last.get_str() + " exceeds --max-limit");
    auto t = st.table(st.mr_ell, st.mr_ell, to_u64(last));
    return verify_maier_inner(st.mr_ell, st.mr_m, st.mr_k, st.mr_M, st.mr_L, *t);
  }
  MaierCertificate cert;
  if (!st.mr_cert.empty()) {
    cert = MaierCertificate::from_json(certificate_from(st.mr_cert));
  } else {
    std::vector<Rational> eps;
    for (const auto& e : st.mr_eps) eps.push_back(parse_rational(e));
    if (eps.size() != st.mr_E.size()) throw Error("--eps and --E differ in length");
    cert = MaierCertificate::make(st.mr_ell, st.mr_K, st.mr_M, st.mr_m, eps, st.mr_E, st.mr_N);
  }
  require_within("modulus", cert.M, "max-modulus", st.bounds.max_modulus);
  auto t = st.table(cert.ell, cert.ell, cert.N ? cert.N - 1 : 0);
  return verify_maier(cert, *t, residue_counts(cert.ell, cert.M));
}

Report run_degree(State& st) {
  const NestedOverrides& o = st.ng_over;
  auto u = [](const std::string& s, std::uint64_t fallback) {
    return s.empty() ? fallback : to_u64(parse_bigint(s));
  };
  if (o.E.empty()) throw Error("--E is required with --degree");
  if (st.ng_N == 0) throw Error("--N is required with --degree");
  DegreeInstance inst{st.ng_ell,  u(o.q, 2),      parse_rational(st.ng_J),
                      parse_rational(o.E),        st.ng_N,
                      u(o.K1, 1), u(o.K2, 1),     u(o.n1, 0),
                      u(o.n2, 0)};
  const std::uint64_t limit = st.ng_N + inst.K1 + default_tail_span(inst.K1);
  auto lower = st.table(inst.ell, inst.ell - 1, limit);
  auto full = st.table(inst.ell, inst.ell, limit);
  const auto span = positive_or_none(st.ng_span);
  if (st.ng_search) {
    auto found = find_degree_instance(inst.ell, inst.q, inst.E, inst.K1, inst.N, lower, full, span);
    if (!found) {
      Report rep;
      rep.certificate = inst.to_json();
      rep.check("instance found among sieved gaps", false);
      return rep;
    }
    found->J = inst.J;
    inst = *found;
  }
  Report rep = verify_degree_criterion(inst, lower, full, span);
  rep.summary["searched"] = st.ng_search;
  return rep;
}

Report run_nested(State& st) {
  if (st.ng_degree) return run_degree(st);
  const auto cert = load_nested(st, st.ng_cert, st.ng_synthetic, st.ng_over);
  if (!st.ng_emit.empty())
    write_file(st.ng_emit, [&](std::ostream& o) { o << cert.to_json().dump(2) << '\n'; });
  return verify_nested_gaps(cert);
}

Report run_measure(State& st) {
  const auto cert = load_nested(st, st.ms_cert, st.ms_synthetic, st.ms_over);
  if (st.ms_terms) require_within("terms", st.ms_terms, "max-terms", st.bounds.max_terms);
  return check_measure(cert, positive_or_none(st.ms_terms));
}

Report run_linforms(State& st) {
  require_within("height", st.lf_height, "max-height", st.bounds.max_height);
  require_within("terms", st.lf_terms, "max-terms", st.bounds.max_terms);
  return check_theta_linear_forms(st.lf_ell, st.lf_q, st.lf_height, st.lf_terms);
}

Report run_pipeline(State& st) {
  PipelineConfig c;
  c.ell = st.pl_ell;
  c.q = st.pl_q;
  c.J = parse_rational(st.pl_J);
  if (!st.pl_sigma.empty()) c.sigma = parse_rational(st.pl_sigma);
  if (!st.pl_xi.empty()) c.xi = parse_rational(st.pl_xi);
  c.K1 = st.pl_K1;
  c.pool = st.pl_pool;
  c.product_bound = st.pl_product;
  c.require_even = st.pl_even;
  c.max_M = st.pl_max_M;
  c.max_N = st.pl_max_N;
  c.max_sieve = st.pl_max_sieve;
  c.tail_span = positive_or_none(st.pl_span);
  require_within("max-sieve", c.max_sieve, "max-limit", st.bounds.max_limit);
  return pipeline_dry_run(c);
}

Report run_exceptional(State& st) {
  auto t = st.table(4, 4, st.ex_limit);
  const auto set = scan_exceptional_set(st.ex_limit, parse_rational(st.ex_epsilon), *t);
  Report rep;
  rep.certificate = {{"limit", st.ex_limit}, {"epsilon", st.ex_epsilon},
                     {"exponent", to_string(set.exponent)}};
  rep.summary = {{"count", set.members.size()},
                 {"density", to_string(set.density)},
                 {"display_only", {{"density", decimal(set.density)}}}};
  if (st.ex_out.empty()) {
    rep.summary["members"] = set.members;
  } else {
    write_file(st.ex_out, [&](std::ostream& o) {
      o << "a\n";
      for (auto a : set.members) o << a << '\n';
    });
    rep.summary["out"] = st.ex_out;
  }
  return rep;
}

void build(CLI::App& app, State& st, std::map<std::string, Command>& cmds) {
  app.fallthrough();
  app.require_subcommand(0, 1);
  app.add_option("--threads", st.threads, "worker cap (default: WARING_GAPS_THREADS or 1)");
  app.add_option("--config", st.config, "flat key=value file; flags take precedence");
  app.add_option("--report", st.report, "write the JSON report here instead of stdout");
  app.add_option("--replay", st.replay, "re-run the invocation recorded in a report");
  app.add_option("--max-limit", st.bounds.max_limit, "largest sieve limit");
  app.add_option("--max-modulus", st.bounds.max_modulus, "largest residue modulus");
  app.add_option("--max-height", st.bounds.max_height, "largest linear form height");
  app.add_option("--max-terms", st.bounds.max_terms, "largest series truncation");

  auto add = [&](const std::string& name, const std::string& desc,
                 std::function<Report(State&)> fn) -> Command& {
    Command& c = cmds.try_emplace(name, app, name, desc).first->second;
    c.action = [fn, &st] { return fn(st); };
    return c;
  };

  {
    Command& c = add("sieve", "representation counts r_{ell,s}(n) for n <= limit", run_sieve);
    c.option("ell", st.sv_ell, "power (3 or 4)");
    c.option("s", st.sv_s, "number of summands (1..ell)");
    c.option("limit", st.sv_limit, "largest n");
    c.option("width", st.sv_width, "WRT1 byte width (0 = smallest safe)");
    c.option("out", st.sv_out, "output table (.csv for CSV, otherwise WRT1)");
  }
  {
    Command& c = add("gaps", "maximal runs of zero counts", run_gaps);
    c.option("table", st.gp_table, "WRT1 table (otherwise sieve ell, s, limit)");
    c.option("ell", st.gp_ell, "power");
    c.option("s", st.gp_s, "summands");
    c.option("limit", st.gp_limit, "largest n");
    c.option("min-len", st.gp_min, "shortest run reported");
    c.option("out", st.gp_out, "CSV of runs");
  }
  {
    Command& c = add("greedy", "greedy decompositions of b in [from, to]", run_greedy);
    c.option("ell", st.gr_ell, "power");
    c.option("from", st.gr_from, "first b");
    c.option("to", st.gr_to, "last b");
    c.option("out", st.gr_out, "CSV of decompositions");
  }
  {
    Command& c = add("modcount", "residue profile r_{ell,ell}(m, M)", run_modcount);
    c.option("ell", st.mc_ell, "power");
    c.option("M", st.mc_modulus, "modulus");
    c.option("out", st.mc_out, "CSV of the profile");
  }
  {
    Command& c = add("crt", "profile of M1 M2 from coprime factors", run_crt);
    c.option("ell", st.crt_ell, "power");
    c.option("M1", st.crt_m1, "first modulus");
    c.option("M2", st.crt_m2, "second modulus, coprime to M1");
    c.option("out", st.crt_out, "CSV of the combined profile");
  }
  {
    Command& c = add("modsearch", "modulus with an empty residue window", run_modsearch);
    c.option("ell", st.ms_ell, "power");
    c.option("K1", st.ms_K1, "window length");
    c.option("pool", st.ms_pool, "comma separated moduli");
    c.option("product-bound", st.ms_product, "largest coprime product (0 = pool only)");
    c.option("reserve", st.ms_reserve, "require m + reserve < M");
    c.flag("require-small-start", st.ms_small, "require 2m < M");
    c.flag("require-even", st.ms_even, "only even moduli");
  }
  {
    Command& c = add("mild-scan", "mild gap points of a half-function", run_mild_scan);
    c.option("function", st.mg_function, "JSON function descriptor (otherwise f_{ell,s})");
    c.option("ell", st.mg_ell, "power");
    c.option("s", st.mg_s, "summands");
    c.option("limit", st.mg_limit, "table limit");
    c.option("lo", st.mg_lo, "first n");
    c.option("hi", st.mg_hi, "end of the scan (0 = coverage)");
    c.option("K", st.mg_K, "gap length");
    c.option("E", st.mg_E, "tail bound (rational)");
    c.option("tail-span", st.mg_span, "exact tail terms past the gap (0 = max(64, 4K))");
    c.option("out", st.mg_out, "CSV of mild points");
  }
  {
    Command& c = add("theta", "enclosure of f(1/q)", run_theta);
    c.option("function", st.th_function, "JSON function descriptor (otherwise f_{ell,s})");
    c.option("ell", st.th_ell, "power");
    c.option("s", st.th_s, "exponent j of theta^j");
    c.option("q", st.th_q, "evaluation at 1/q");
    c.option("terms", st.th_terms, "truncation");
  }
  {
    Command& c = add("maier", "Maier counting certificate", run_maier);
    c.option("cert", st.mr_cert, "JSON certificate (otherwise the flags below)");
    c.option("ell", st.mr_ell, "power");
    c.option("K", st.mr_K, "window length");
    c.option("M", st.mr_M, "modulus");
    c.option("m", st.mr_m, "residue");
    c.option("eps", st.mr_eps, "comma separated rationals eps_0..eps_K");
    c.option("E", st.mr_E, "comma separated integers E_0..E_K");
    c.option("N", st.mr_N, "range [0, N)");
    c.flag("inner", st.mr_inner, "check the column inequality instead");
    c.option("k", st.mr_k, "offset k for --inner");
    c.option("L", st.mr_L, "L for --inner");
  }
  {
    Command& c = add("nested", "nested gaps hypotheses or the degree criterion", run_nested);
    c.option("cert", st.ng_cert, "JSON certificate or report");
    c.flag("synthetic", st.ng_synthetic, "use the built-in polynomial instance");
    st.ng_over.add_to(c);
    c.option("emit-cert", st.ng_emit, "write the effective certificate here");
    c.flag("degree", st.ng_degree, "check the degree criterion on sieved tables");
    c.flag("search", st.ng_search, "with --degree, search for the best instance");
    c.option("ell", st.ng_ell, "power for --degree");
    c.option("J", st.ng_J, "J for --degree (rational)");
    c.option("N", st.ng_N, "N for --degree");
    c.option("tail-span", st.ng_span, "exact tail terms past each gap (0 = default)");
  }
  {
    Command& c = add("measure", "linear independence measure on a nested certificate",
                     run_measure);
    c.option("cert", st.ms_cert, "JSON certificate or report");
    c.flag("synthetic", st.ms_synthetic, "use the built-in polynomial instance");
    st.ms_over.add_to(c);
    c.option("terms", st.ms_terms, "truncation (0 = n2 + 64)");
  }
  {
    Command& c = add("linforms", "non-vanishing of small linear forms in theta powers",
                     run_linforms);
    c.option("ell", st.lf_ell, "power");
    c.option("q", st.lf_q, "evaluation at 1/q");
    c.option("height", st.lf_height, "max |alpha_j|");
    c.option("terms", st.lf_terms, "truncation");
  }
  {
    Command& c = add("pipeline", "desk-scale parameter recipe", run_pipeline);
    c.option("ell", st.pl_ell, "power");
    c.option("q", st.pl_q, "base");
    c.option("J", st.pl_J, "degree criterion J (rational)");
    c.option("sigma", st.pl_sigma, "N = floor(M^sigma) (default per ell)");
    c.option("xi", st.pl_xi, "schedule constant (default 32/3)");
    c.option("K1", st.pl_K1, "inner gap length");
    c.option("pool", st.pl_pool, "comma separated moduli (default per ell)");
    c.option("product-bound", st.pl_product, "largest coprime product (0 = max-M)");
    c.flag("require-even", st.pl_even, "only even moduli");
    c.option("max-M", st.pl_max_M, "largest modulus");
    c.option("max-N", st.pl_max_N, "largest N");
    c.option("max-sieve", st.pl_max_sieve, "largest sieve limit");
    c.option("tail-span", st.pl_span, "exact tail terms past each gap (0 = default)");
  }
  {
    Command& c = add("exceptional", "exceptional set A_N for biquadrates", run_exceptional);
    c.option("limit", st.ex_limit, "N");
    c.option("epsilon", st.ex_epsilon, "epsilon (rational)");
    c.option("out", st.ex_out, "CSV of members");
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Appends config file entries for keys the arguments leave unset.
std::vector<std::string> with_config(std::vector<std::string> args,
                                     const std::set<std::string>& subcommands) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "subcommand") {
      if (std::none_of(args.begin(), args.end(),
                       [&](const std::string& a) { return subcommands.count(a); }))
        args.insert(args.begin(), value);
      continue;
    }
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (!given) args.push_back(flag + "=" + value);
  }
  return args;
}

json strip_threads(json j) {
  if (j.contains("config")) j["config"].erase("threads");
  return j;
}

json verdict_list(const json& report) {
  json v = json::array();
  for (const auto& c : report.at("per_condition")) v.push_back({c.at("name"), c.at("verdict")});
  return v;
}

int run_checked(const std::vector<std::string>& raw, std::ostream& out, std::ostream& err);

int replay(const State& st, std::ostream& out, std::ostream& err) {
  const json stored = read_json(st.replay);
  if (!stored.contains("config")) throw Error("'" + st.replay + "' carries no config");
  const json& cfg = stored.at("config");
  std::vector<std::string> again{cfg.at("subcommand").get<std::string>()};
  for (const auto& [k, v] : cfg.at("params").items()) {
    const std::string value = v.get<std::string>();
    if (!value.empty()) again.push_back("--" + k + "=" + value);
  }
  for (const auto& [k, v] : cfg.at("bounds").items())
    again.push_back("--" + k + "=" + std::to_string(v.get<std::uint64_t>()));
  if (st.threads) again.push_back("--threads=" + std::to_string(st.threads));

  std::ostringstream buf, diag;
  const int code = run_checked(again, buf, diag);
  Report rep;
  rep.certificate = {{"replayed", st.replay}, {"arguments", again}};
  json produced;
  try {
    produced = json::parse(buf.str());
  } catch (const json::exception&) {
    rep.check("replayed run produced a report", false,
              {{"exit_status", code}, {"diagnostics", diag.str()}});
    out << rep.to_json().dump(2) << '\n';
    return static_cast<int>(rep.outcome());
  }
  rep.check("verdicts reproduce", verdict_list(produced) == verdict_list(stored),
            {{"stored", verdict_list(stored)}, {"replayed", verdict_list(produced)}});
  rep.check("report reproduces bit-identically",
            strip_threads(produced).dump() == strip_threads(stored).dump());
  rep.summary = {{"stored_outcome", stored.at("summary").at("outcome")},
                 {"replayed_outcome", produced.at("summary").at("outcome")},
                 {"threads", thread_count()}};
  err << diag.str();
  out << rep.to_json().dump(2) << '\n';
  return static_cast<int>(rep.outcome());
}

int run_checked(const std::vector<std::string>& raw, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact computations and certificate checks for gaps in Waring representations",
               "waring-gaps"};
  State st;
  std::map<std::string, Command> cmds;
  build(app, st, cmds);
  std::set<std::string> names;
  for (const auto& [name, c] : cmds) names.insert(name);

  std::vector<std::string> args = with_config(raw, names);
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ExtrasError& e) {
    if (app.get_subcommands().empty() && !args.empty())
      err << "unknown subcommand: " << e.what() << '\n';
    else
      err << "unexpected arguments: " << e.what() << '\n';
    return static_cast<int>(Outcome::invalid);
  } catch (const CLI::ParseError& e) {
    err << "malformed parameters: " << e.what() << '\n';
    return static_cast<int>(Outcome::invalid);
  }
  set_thread_count(st.threads);

  if (!st.replay.empty()) return replay(st, out, err);
  if (app.get_subcommands().empty()) {
    err << "no subcommand given\n" << app.help();
    return static_cast<int>(Outcome::invalid);
  }
  const std::string name = app.get_subcommands().front()->get_name();
  Command& cmd = cmds.at(name);
  const Report rep = cmd.action();
  json j = rep.to_json();
  j["config"] = {{"subcommand", name},
                 {"params", cmd.params()},
                 {"bounds", st.bounds.to_json()},
                 {"threads", thread_count()}};
  if (st.report.empty()) {
    out << j.dump(2) << '\n';
  } else {
    write_file(st.report, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
    out << name << ": " << to_string(rep.outcome()) << '\n';
  }
  return static_cast<int>(rep.outcome());
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return run_checked(args, out, err);
  } catch (const BoundError& e) {
    err << "bound exceeded: " << e.what() << '\n';
  } catch (const GrowthViolation& e) {
    err << "growth certificate violated: " << e.what() << '\n';
  } catch (const CoverageError& e) {
    err << "insufficient coverage: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "invalid input: " << e.what() << '\n';
  }
  set_thread_count(0);
  return static_cast<int>(Outcome::invalid);
}

}  // namespace waring_gaps::cli
