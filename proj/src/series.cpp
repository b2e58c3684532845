#include "waring_gaps/series.hpp"

#include <algorithm>

namespace waring_gaps {

// ---------------------------------------------------------------- Enclosure

Enclosure Enclosure::around(const Rational& center, const Rational& radius) {
  if (radius < 0) throw Error("negative enclosure radius");
  return {center - radius, center + radius};
}

Rational Enclosure::magnitude_lower_bound() const {
  if (lo > 0) return lo;
  if (hi < 0) return -hi;
  return 0;
}

Enclosure operator+(const Enclosure& a, const Enclosure& b) {
  return {a.lo + b.lo, a.hi + b.hi};
}

Enclosure operator-(const Enclosure& a, const Enclosure& b) {
  return {a.lo - b.hi, a.hi - b.lo};
}

Enclosure operator*(const Enclosure& a, const Enclosure& b) {
  Rational c[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  return {*std::min_element(c, c + 4), *std::max_element(c, c + 4)};
}

Enclosure operator*(const BigInt& k, const Enclosure& e) {
  Rational kq(k);
  if (k >= 0) return {kq * e.lo, kq * e.hi};
  return {kq * e.hi, kq * e.lo};
}

Enclosure pow(const Enclosure& e, unsigned exponent) {
  const Rational a = pow(e.lo, exponent), b = pow(e.hi, exponent);
  if (exponent % 2 == 1) return {a, b};
  if (e.lo <= 0 && e.hi >= 0) return {0, std::max(a, b)};
  return {std::min(a, b), std::max(a, b)};
}

nlohmann::json to_json(const Enclosure& e) {
  return {{"lo", to_string(e.lo)}, {"hi", to_string(e.hi)}};
}

Enclosure enclosure_from_json(const nlohmann::json& j) {
  Enclosure e{parse_rational(j.at("lo").get<std::string>()),
              parse_rational(j.at("hi").get<std::string>())};
  if (e.lo > e.hi) throw Error("enclosure with lo > hi");
  return e;
}

// ------------------------------------------------------------ HalfFunction

class HalfFunction::Node {
 public:
  virtual ~Node() = default;
  // Coefficient without coverage or growth checks.
  virtual BigInt raw(std::uint64_t n) const = 0;
  virtual std::optional<std::uint64_t> next_nonzero(std::uint64_t from) const = 0;
  virtual nlohmann::json describe() const = 0;

  Rational growth;
  std::optional<std::uint64_t> coverage;
  Provenance provenance = Provenance::polynomial;
  std::string id;
};

namespace {

class TableNode final : public HalfFunction::Node {
 public:
  explicit TableNode(std::shared_ptr<const RepTable> t) : table(std::move(t)) {
    growth = Rational(BigInt(1) << table->params().ell);
    coverage = table->limit();
    provenance = Provenance::rep_table;
    id = "f_{" + std::to_string(table->params().ell) + "," +
         std::to_string(table->params().s) + "}";
  }
  BigInt raw(std::uint64_t n) const override { return from_u64((*table)[n]); }
  std::optional<std::uint64_t> next_nonzero(std::uint64_t from) const override {
    auto counts = table->counts();
    for (std::uint64_t n = from; n < counts.size(); ++n)
      if (counts[n] != 0) return n;
    return std::nullopt;
  }
  nlohmann::json describe() const override {
    return {{"kind", "theta_power"},
            {"ell", table->params().ell},
            {"s", table->params().s},
            {"limit", table->limit()}};
  }

  std::shared_ptr<const RepTable> table;
};

class PolynomialNode final : public HalfFunction::Node {
 public:
  BigInt raw(std::uint64_t n) const override {
    auto it = coefficients.find(n);
    return it == coefficients.end() ? BigInt(0) : it->second;
  }
  std::optional<std::uint64_t> next_nonzero(std::uint64_t from) const override {
    auto it = coefficients.lower_bound(from);
    if (it == coefficients.end()) return std::nullopt;
    return it->first;
  }
  nlohmann::json describe() const override {
    if (provenance == Provenance::constant) {
      return {{"kind", "constant"}, {"value", raw(0).get_str()}};
    }
    nlohmann::json coeffs = nlohmann::json::object();
    for (const auto& [n, a] : coefficients) coeffs[std::to_string(n)] = a.get_str();
    return {{"kind", "polynomial"},
            {"coefficients", coeffs},
            {"growth", to_string(growth)},
            {"id", id}};
  }

  std::map<std::uint64_t, BigInt> coefficients;  // nonzero entries only
};

class CombinationNode final : public HalfFunction::Node {
 public:
  BigInt raw(std::uint64_t n) const override {
    BigInt sum = 0;
    for (std::size_t j = 0; j < alphas.size(); ++j)
      if (alphas[j] != 0) sum += alphas[j] * terms[j].node().raw(n);
    return sum;
  }
  std::optional<std::uint64_t> next_nonzero(std::uint64_t from) const override {
    // A nonzero coefficient of the sum is a nonzero coefficient of some term.
    for (;;) {
      std::optional<std::uint64_t> candidate;
      for (std::size_t j = 0; j < alphas.size(); ++j) {
        if (alphas[j] == 0) continue;
        auto nz = terms[j].next_nonzero(from);
        if (nz && (!candidate || *nz < *candidate)) candidate = nz;
      }
      if (!candidate) return std::nullopt;
      if (coverage && *candidate > *coverage) return std::nullopt;
      if (raw(*candidate) != 0) return candidate;
      from = *candidate + 1;
    }
  }
  nlohmann::json describe() const override {
    nlohmann::json a = nlohmann::json::array(), t = nlohmann::json::array();
    for (const auto& v : alphas) a.push_back(v.get_str());
    for (const auto& f : terms) t.push_back(f.describe());
    return {{"kind", "linear_combination"}, {"alphas", a}, {"terms", t}};
  }

  std::vector<BigInt> alphas;
  std::vector<HalfFunction> terms;
};

}  // namespace

HalfFunction HalfFunction::from_table(std::shared_ptr<const RepTable> table) {
  if (!table) throw Error("null rep table");
  return HalfFunction(std::make_shared<TableNode>(std::move(table)));
}

HalfFunction HalfFunction::constant(const BigInt& value) {
  auto node = std::make_shared<PolynomialNode>();
  if (value != 0) node->coefficients[0] = value;
  node->growth = Rational(abs(value));
  node->provenance = Provenance::constant;
  node->id = "const(" + value.get_str() + ")";
  return HalfFunction(std::move(node));
}

HalfFunction HalfFunction::polynomial(std::map<std::uint64_t, BigInt> coefficients,
                                      const Rational& growth, std::string id) {
  if (growth < 0) throw Error("growth certificate must be nonnegative");
  auto node = std::make_shared<PolynomialNode>();
  for (auto& [n, a] : coefficients) {
    if (a != 0) node->coefficients.emplace(n, a);
  }
  node->growth = growth;
  node->id = id.empty() ? "poly" : std::move(id);
  return HalfFunction(std::move(node));
}

BigInt HalfFunction::coefficient(std::uint64_t n) const {
  if (node_->coverage && n > *node_->coverage)
    throw CoverageError(node_->id + ": coefficient " + std::to_string(n) +
                        " beyond coverage " + std::to_string(*node_->coverage));
  BigInt a = node_->raw(n);
  const Rational& c = node_->growth;
  if (abs(a) * c.get_den() > c.get_num() * (from_u64(n) + 1))
    throw GrowthViolation(node_->id + ": |a_" + std::to_string(n) +
                          "| exceeds c (n+1)");
  return a;
}

const Rational& HalfFunction::growth() const { return node_->growth; }
std::optional<std::uint64_t> HalfFunction::coverage() const { return node_->coverage; }
std::optional<std::uint64_t> HalfFunction::next_nonzero(std::uint64_t from) const {
  return node_->next_nonzero(from);
}
Provenance HalfFunction::provenance() const { return node_->provenance; }
const std::string& HalfFunction::id() const { return node_->id; }
nlohmann::json HalfFunction::describe() const { return node_->describe(); }

HalfFunction linear_combination(const std::vector<BigInt>& alphas,
                                const std::vector<HalfFunction>& fs) {
  if (alphas.size() != fs.size())
    throw Error("linear_combination needs as many coefficients as functions");
  auto node = std::make_shared<CombinationNode>();
  node->alphas = alphas;
  node->terms = fs;
  node->growth = 0;
  node->provenance = Provenance::linear_combination;
  node->id = "sum(";
  for (std::size_t j = 0; j < fs.size(); ++j) {
    node->growth += Rational(abs(alphas[j])) * fs[j].growth();
    if (auto cov = fs[j].coverage(); cov && (!node->coverage || *cov < *node->coverage))
      node->coverage = cov;
    node->id += (j ? "," : "") + alphas[j].get_str() + "*" + fs[j].id();
  }
  node->id += ")";
  return HalfFunction(std::move(node));
}

// ------------------------------------------------------------------ tails

TailStart tail_start(const HalfFunction& f, std::uint64_t from) {
  auto cov = f.coverage();
  if (cov && from > *cov) return {false, from};
  if (auto nz = f.next_nonzero(from)) return {false, *nz};
  if (!cov) return {true, from};
  return {false, *cov + 1};
}

Enclosure tail_norm(const HalfFunction& f, std::uint64_t start,
                    std::uint64_t cutoff) {
  if (start < 1) throw Error("tail_norm needs start >= 1");
  if (cutoff < start) throw Error("tail_norm needs cutoff >= start");
  if (auto cov = f.coverage()) cutoff = std::max(start, std::min(cutoff, *cov + 1));

  // Exact partial sum as an integer over 2^{cutoff-start-1}.
  const std::uint64_t span = cutoff - start;
  BigInt num = 0;
  for (std::uint64_t i = 0; i < span; ++i) {
    BigInt a = f.coefficient(start + i);
    if (a != 0) num += abs(a) << static_cast<mp_bitcnt_t>(span - 1 - i);
  }
  Rational lo = span == 0 ? Rational(0)
                          : make_rational(num, BigInt(1) << static_cast<mp_bitcnt_t>(span - 1));

  TailStart ts = tail_start(f, cutoff);
  if (ts.all_zero) return Enclosure::exact(lo);
  // Lemma-style majorant at n0 = ts.index, carried back to `start`.
  Rational majorant = 8 * f.growth() * Rational(from_u64(ts.index)) *
                      reciprocal_power(2, ts.index - start);
  return {lo, lo + majorant};
}

std::uint64_t default_tail_span(std::uint64_t K) { return std::max<std::uint64_t>(64, 4 * K); }

MildGapVerdict is_mild_gap(const HalfFunction& f, std::uint64_t n,
                           std::uint64_t K, const Rational& E,
                           std::optional<std::uint64_t> tail_span) {
  if (K == 0) throw Error("gap length K must be positive");
  if (E <= 0) throw Error("tail bound E must be positive");
  MildGapVerdict v;
  if (auto cov = f.coverage(); cov && n + K - 1 > *cov)
    throw CoverageError(f.id() + ": gap [" + std::to_string(n) + ", " +
                        std::to_string(n + K) + ") beyond coverage");
  if (auto nz = f.next_nonzero(n); nz && *nz < n + K) {
    f.coefficient(*nz);  // growth check on the offending coefficient
    v.outcome = MildGapOutcome::gap_fails;
    v.nonzero_index = *nz;
    v.detail = "a_" + std::to_string(*nz) + " != 0";
    return v;
  }
  const std::uint64_t start = n + K;
  const std::uint64_t cutoff = start + tail_span.value_or(default_tail_span(K));
  Enclosure tail = tail_norm(f, start, cutoff);
  v.tail = tail;
  if (tail.hi <= E) {
    v.outcome = MildGapOutcome::witness;
    v.witness = MildGapWitness{f.id(), n, K, E, n + K - 1, cutoff, tail};
    v.detail = "gap and tail clauses hold";
  } else if (tail.lo > E) {
    v.outcome = MildGapOutcome::tail_fails;
    v.detail = "tail norm exceeds E";
  } else {
    v.outcome = MildGapOutcome::inconclusive;
    v.detail = "inconclusive at this cutoff";
  }
  return v;
}

bool replay_witness(const HalfFunction& f, const MildGapWitness& w) {
  if (w.K == 0 || w.E <= 0 || w.zero_checked_up_to != w.n + w.K - 1) return false;
  for (std::uint64_t k = 0; k < w.K; ++k)
    if (f.coefficient(w.n + k) != 0) return false;
  Enclosure fresh = tail_norm(f, w.n + w.K, w.tail_cutoff);
  return fresh == w.tail_enclosure && fresh.hi <= w.E;
}

MildGapScan scan_mild_gaps(const HalfFunction& f, std::uint64_t lo,
                           std::uint64_t hi, std::uint64_t K, const Rational& E,
                           std::optional<std::uint64_t> tail_span) {
  if (K == 0) throw Error("gap length K must be positive");
  MildGapScan out;
  std::uint64_t n = lo;
  while (n < hi) {
    if (auto nz = f.next_nonzero(n); nz && *nz < n + K) {
      n = *nz + 1;
      continue;
    }
    MildGapVerdict v = is_mild_gap(f, n, K, E, tail_span);
    if (v.outcome == MildGapOutcome::witness)
      out.witnesses.push_back(*v.witness);
    else if (v.outcome == MildGapOutcome::inconclusive)
      out.inconclusive.push_back(n);
    ++n;
  }
  return out;
}

Rational eval_truncated(const HalfFunction& f, unsigned long q,
                        std::uint64_t terms) {
  if (q < 2) throw Error("q must be at least 2");
  if (terms == 0) return 0;
  // Horner: numerator over q^{terms-1}.
  BigInt num = 0;
  const BigInt qq(q);
  std::uint64_t k = 0;
  while (k < terms) {
    auto nz = f.next_nonzero(k);
    if (auto cov = f.coverage(); cov && terms - 1 > *cov)
      throw CoverageError(f.id() + ": truncation beyond coverage");
    const std::uint64_t stop = nz ? std::min<std::uint64_t>(*nz, terms) : terms;
    num *= pow(qq, stop - k);
    k = stop;
    if (k < terms) {
      num = num * qq + f.coefficient(k);
      ++k;
    }
  }
  return make_rational(num, pow(qq, terms - 1));
}

Rational growth_tail(const Rational& c, unsigned long q, std::uint64_t g) {
  if (q < 2) throw Error("q must be at least 2");
  const Rational qm1(q - 1);
  const Rational qr(q);
  Rational series = Rational(from_u64(g) + 1) * qr / qm1 + qr / (qm1 * qm1);
  return c * series * reciprocal_power(q, g);
}

Enclosure eval_enclosure(const HalfFunction& f, unsigned long q,
                         std::uint64_t terms) {
  Rational center = eval_truncated(f, q, terms);
  TailStart ts = tail_start(f, terms);
  if (ts.all_zero) return Enclosure::exact(center);
  const Rational t = growth_tail(f.growth(), q, ts.index);
  // Counts are nonnegative, so the tail only adds.
  if (f.provenance() == Provenance::rep_table) return {center, center + t};
  return Enclosure::around(center, t);
}

nlohmann::json to_json(const MildGapWitness& w) {
  return {{"function", w.function_id},
          {"n", w.n},
          {"K", w.K},
          {"E", to_string(w.E)},
          {"zero_checked_up_to", w.zero_checked_up_to},
          {"tail_cutoff", w.tail_cutoff},
          {"tail_enclosure", to_json(w.tail_enclosure)}};
}

std::string to_string(MildGapOutcome outcome) {
  switch (outcome) {
    case MildGapOutcome::witness: return "witness";
    case MildGapOutcome::gap_fails: return "gap_fails";
    case MildGapOutcome::tail_fails: return "tail_fails";
    case MildGapOutcome::inconclusive: return "inconclusive";
  }
  return "unknown";
}

// ---------------------------------------------------------------- factories

std::shared_ptr<const RepTable> TableCache::get(unsigned ell, unsigned s,
                                                std::uint64_t limit) {
  auto key = std::make_tuple(ell, s, limit);
  if (auto it = tables_.find(key); it != tables_.end()) return it->second;
  auto table = std::make_shared<const RepTable>(sieve_rep(WaringParams::make(ell, s), limit));
  tables_.emplace(key, table);
  return table;
}

HalfFunction theta_power(TableCache& cache, unsigned ell, unsigned s,
                         std::uint64_t limit) {
  if (s == 0) {
    WaringParams::make(ell, 1);
    return HalfFunction::constant(1);
  }
  return HalfFunction::from_table(cache.get(ell, s, limit));
}

namespace {

BigInt json_integer(const nlohmann::json& j) {
  if (j.is_string()) return parse_bigint(j.get<std::string>());
  if (j.is_number_integer()) return BigInt(j.get<long>());
  throw Error("expected an integer, got " + j.dump());
}

}  // namespace

HalfFunction function_from_json(const nlohmann::json& j, TableCache& cache) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "theta_power")
    return theta_power(cache, j.at("ell").get<unsigned>(), j.at("s").get<unsigned>(),
                       j.at("limit").get<std::uint64_t>());
  if (kind == "constant") return HalfFunction::constant(json_integer(j.at("value")));
  if (kind == "polynomial") {
    std::map<std::uint64_t, BigInt> coeffs;
    for (const auto& [key, value] : j.at("coefficients").items())
      coeffs[std::stoull(key)] = json_integer(value);
    return HalfFunction::polynomial(std::move(coeffs),
                                    parse_rational(j.at("growth").get<std::string>()),
                                    j.value("id", std::string("poly")));
  }
  if (kind == "linear_combination") {
    std::vector<BigInt> alphas;
    std::vector<HalfFunction> terms;
    for (const auto& a : j.at("alphas")) alphas.push_back(json_integer(a));
    for (const auto& t : j.at("terms")) terms.push_back(function_from_json(t, cache));
    return linear_combination(alphas, terms);
  }
  throw Error("unknown function kind '" + kind + "'");
}

}  // namespace waring_gaps
