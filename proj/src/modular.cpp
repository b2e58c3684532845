#include "waring_gaps/modular.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>
#include <string>

namespace waring_gaps {

namespace {

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

std::uint64_t powmod(std::uint64_t x, unsigned e, std::uint64_t m) {
  std::uint64_t out = 1 % m;
  for (unsigned i = 0; i < e; ++i) out = mulmod(out, x, m);
  return out;
}

void check_modulus(std::uint64_t modulus) {
  if (modulus == 0) throw Error("modulus must be positive");
}

}  // namespace

PowerHistogram power_histogram(unsigned ell, std::uint64_t modulus) {
  check_modulus(modulus);
  if (ell == 0) throw Error("ell must be positive");
  PowerHistogram h{ell, modulus, std::vector<std::uint64_t>(modulus, 0)};
  for (std::uint64_t x = 0; x < modulus; ++x) ++h.counts[powmod(x, ell, modulus)];
  return h;
}

const BigInt& ResidueProfile::at(std::int64_t m) const {
  const auto M = static_cast<std::int64_t>(modulus);
  return r[static_cast<std::size_t>(((m % M) + M) % M)];
}

BigInt ResidueProfile::mass() const {
  BigInt total = 0;
  for (const auto& v : r) total += v;
  return total;
}

ResidueProfile residue_counts(unsigned ell, std::uint64_t modulus) {
  const PowerHistogram h = power_histogram(ell, modulus);
  std::vector<std::pair<std::uint64_t, unsigned long>> support;
  for (std::uint64_t v = 0; v < modulus; ++v)
    if (h.counts[v] != 0) support.emplace_back(v, h.counts[v]);

  std::vector<BigInt> acc(modulus);
  for (std::uint64_t v = 0; v < modulus; ++v) acc[v] = h.counts[v];
  for (unsigned fold = 1; fold < ell; ++fold) {
    std::vector<BigInt> next(modulus, 0);
    for (std::uint64_t u = 0; u < modulus; ++u) {
      if (acc[u] == 0) continue;
      for (auto [v, count] : support) {
        std::uint64_t t = u + v;
        if (t >= modulus) t -= modulus;
        mpz_addmul_ui(next[t].get_mpz_t(), acc[u].get_mpz_t(), count);
      }
    }
    acc = std::move(next);
  }
  return {ell, modulus, std::move(acc)};
}

ResidueProfile crt_combine(const ResidueProfile& p1, const ResidueProfile& p2) {
  if (p1.ell != p2.ell) throw Error("crt_combine needs profiles with the same ell");
  if (std::gcd(p1.modulus, p2.modulus) != 1)
    throw Error("crt_combine needs coprime moduli, got " +
                std::to_string(p1.modulus) + " and " + std::to_string(p2.modulus));
  std::uint64_t M;
  if (__builtin_mul_overflow(p1.modulus, p2.modulus, &M))
    throw OverflowError("combined modulus overflows");
  ResidueProfile out{p1.ell, M, std::vector<BigInt>(M)};
  for (std::uint64_t m = 0; m < M; ++m)
    out.r[m] = p1.r[m % p1.modulus] * p2.r[m % p2.modulus];
  return out;
}

std::vector<std::uint64_t> candidate_moduli(const std::vector<std::uint64_t>& pool,
                                            const ModulusSearchOptions& options) {
  std::vector<std::uint64_t> items(pool);
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  for (auto M : items) check_modulus(M);

  std::vector<std::uint64_t> out(items);
  if (options.product_bound > 0) {
    // Depth-first over pairwise coprime subsets with product <= bound.
    auto extend = [&](auto&& self, std::size_t from, std::uint64_t product,
                      std::size_t used) -> void {
      if (used >= 2) out.push_back(product);
      for (std::size_t i = from; i < items.size(); ++i) {
        if (items[i] == 1 || std::gcd(product, items[i]) != 1) continue;
        std::uint64_t next;
        if (__builtin_mul_overflow(product, items[i], &next) ||
            next > options.product_bound)
          continue;
        self(self, i + 1, next, used + 1);
      }
    };
    extend(extend, 0, 1, 0);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (options.require_even)
    std::erase_if(out, [](std::uint64_t M) { return M % 2 != 0; });
  return out;
}

ModulusCandidate evaluate_modulus(const ResidueProfile& profile,
                                  std::uint64_t start, std::uint64_t window) {
  if (window == 0) throw Error("window K1 must be positive");
  ModulusCandidate c;
  c.ell = profile.ell;
  c.modulus = profile.modulus;
  c.start = start;
  c.window = window;
  const BigInt scale = pow(from_u64(profile.modulus), profile.ell - 1);
  c.window_quality = 0;
  for (std::uint64_t k = 0; k < window; ++k) {
    Rational q = make_rational(profile.r[(start + k) % profile.modulus], scale);
    if (q > c.window_quality) c.window_quality = q;
    c.per_k_quality.push_back(std::move(q));
  }
  BigInt top = *std::max_element(profile.r.begin(), profile.r.end());
  c.global_quality = make_rational(top, scale);
  c.meets_iii = c.window_quality <= make_rational(BigInt(1), 2 * from_u64(window));
  return c;
}

std::optional<ModulusCandidate> search_gap_modulus(
    unsigned ell, std::uint64_t window, const std::vector<std::uint64_t>& pool,
    const ModulusSearchOptions& options) {
  if (pool.empty()) throw Error("moduli pool is empty");
  if (window == 0) throw Error("window K1 must be positive");

  // Profiles of pool elements are combined through the CRT when possible.
  std::map<std::uint64_t, ResidueProfile> cache;
  auto profile_of = [&](auto&& self, std::uint64_t M) -> const ResidueProfile& {
    if (auto it = cache.find(M); it != cache.end()) return it->second;
    for (auto d : pool) {
      if (d > 1 && d < M && M % d == 0 && std::gcd(d, M / d) == 1) {
        ResidueProfile p = crt_combine(self(self, d), self(self, M / d));
        return cache.emplace(M, std::move(p)).first->second;
      }
    }
    return cache.emplace(M, residue_counts(ell, M)).first->second;
  };

  std::optional<ModulusCandidate> best;
  for (auto M : candidate_moduli(pool, options)) {
    const ResidueProfile& profile = profile_of(profile_of, M);
    // Window quality for each start, found with one pass over the maxima.
    std::optional<std::uint64_t> best_start;
    BigInt best_value;
    for (std::uint64_t m = 0; m < M; ++m) {
      if (options.require_small_start && 2 * m >= M) break;
      if (options.reserve > 0 && m + options.reserve >= M) break;
      BigInt worst = 0;
      for (std::uint64_t k = 0; k < window; ++k) {
        const BigInt& v = profile.r[(m + k) % M];
        if (v > worst) worst = v;
      }
      if (!best_start || worst < best_value) {
        best_start = m;
        best_value = worst;
      }
    }
    if (!best_start) continue;
    ModulusCandidate c = evaluate_modulus(profile, *best_start, window);
    if (!best || c.window_quality < best->window_quality) best = std::move(c);
  }
  if (!best || !best->meets_iii) return std::nullopt;
  return best;
}

void write_csv(const ResidueProfile& profile, std::ostream& out) {
  out << "m,count\n";
  for (std::size_t m = 0; m < profile.r.size(); ++m)
    out << m << ',' << profile.r[m].get_str() << '\n';
}

nlohmann::json to_json(const ModulusCandidate& c) {
  nlohmann::json per_k = nlohmann::json::array();
  for (const auto& q : c.per_k_quality) per_k.push_back(to_string(q));
  return {{"ell", c.ell},
          {"M", c.modulus},
          {"m", c.start},
          {"K1", c.window},
          {"per_k_quality", per_k},
          {"window_quality", to_string(c.window_quality)},
          {"global_quality", to_string(c.global_quality)},
          {"meets_iii", c.meets_iii}};
}

}  // namespace waring_gaps
