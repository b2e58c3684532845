#include "waring_gaps/repcount.hpp"

#include "waring_gaps/parallel.hpp"

#include <array>
#include <istream>
#include <ostream>
#include <string>

namespace waring_gaps {

WaringParams WaringParams::make(unsigned ell, unsigned s) {
  if (ell != 3 && ell != 4)
    throw Error("ell must be 3 or 4, got " + std::to_string(ell));
  if (s < 1 || s > ell)
    throw Error("s must satisfy 1 <= s <= ell, got " + std::to_string(s));
  return {ell, s};
}

namespace {

// 2^ell (n+1), the loose bound on r_{ell,s}(n).
std::optional<std::uint64_t> loose_bound(unsigned ell, std::uint64_t n) {
  std::uint64_t out;
  if (n == UINT64_MAX || __builtin_mul_overflow(n + 1, std::uint64_t{1} << ell, &out))
    return std::nullopt;
  return out;
}

std::uint64_t width_max(unsigned width) {
  return width == 8 ? UINT64_MAX : (std::uint64_t{1} << (8 * width)) - 1;
}

}  // namespace

unsigned RepTable::required_width(WaringParams params, std::uint64_t limit) {
  auto ceiling = loose_bound(params.ell, limit);
  if (!ceiling) throw OverflowError("loose bound 2^ell (N+1) exceeds 64 bits");
  for (unsigned w : {1u, 2u, 4u, 8u})
    if (*ceiling <= width_max(w)) return w;
  return 8;
}

RepTable::RepTable(WaringParams params, std::uint64_t limit,
                   std::vector<std::uint64_t> counts, unsigned byte_width)
    : params_(WaringParams::make(params.ell, params.s)),
      limit_(limit),
      byte_width_(byte_width),
      counts_(std::move(counts)) {
  const unsigned need = required_width(params_, limit_);
  if (byte_width_ == 0) byte_width_ = need;
  if (byte_width_ != 1 && byte_width_ != 2 && byte_width_ != 4 && byte_width_ != 8)
    throw Error("byte width must be 1, 2, 4 or 8");
  if (byte_width_ < need)
    throw OverflowError("byte width " + std::to_string(byte_width_) +
                        " is below the ceiling width " + std::to_string(need));
  if (counts_.size() != limit_ + 1)
    throw Error("RepTable needs exactly limit+1 counts");
  if (counts_[0] != 1) throw Error("r(0) must be 1");
  for (std::uint64_t n = 0; n <= limit_; ++n)
    if (counts_[n] > *loose_bound(params_.ell, n))
      throw OverflowError("count at " + std::to_string(n) +
                          " exceeds the loose bound");
}

std::uint64_t RepTable::operator[](std::uint64_t n) const {
  if (n > limit_)
    throw Error("index " + std::to_string(n) + " beyond table limit " +
                std::to_string(limit_));
  return counts_[n];
}

RepTable sieve_rep(WaringParams params, std::uint64_t limit) {
  params = WaringParams::make(params.ell, params.s);
  RepTable::required_width(params, limit);  // rejects ceilings beyond 64 bits

  std::vector<std::uint64_t> powers;
  for (std::uint64_t x = 0;; ++x) {
    auto p = checked_pow(x, params.ell);
    if (!p || *p > limit) break;
    powers.push_back(*p);
  }

  std::vector<std::uint64_t> cur(limit + 1, 0);
  for (auto p : powers) cur[p] = 1;

  const std::size_t size = limit + 1;
  constexpr std::size_t kSegment = std::size_t{1} << 14;
  const std::size_t segments = (size + kSegment - 1) / kSegment;
  for (unsigned step = 2; step <= params.s; ++step) {
    std::vector<std::uint64_t> next(size, 0);
    // Each segment of the output reads only `cur`, so segments are independent.
    parallel_chunks(0, segments, segments, [&](std::size_t sb, std::size_t se,
                                               std::size_t) {
      for (std::size_t seg = sb; seg < se; ++seg) {
        const std::size_t lo = seg * kSegment;
        const std::size_t hi = std::min(size, lo + kSegment);
        std::uint64_t* out = next.data();
        for (auto p : powers) {
          if (p >= hi) break;
          const std::size_t from = std::max<std::size_t>(lo, p);
          const std::uint64_t* in = cur.data();
          for (std::size_t n = from; n < hi; ++n) out[n] += in[n - p];
        }
      }
    });
    cur = std::move(next);
  }
  // The RepTable constructor re-checks every entry against the loose bound.
  return RepTable(params, limit, std::move(cur));
}

GreedyDecomposition greedy_decompose(unsigned ell, std::uint64_t b) {
  if (ell != 3 && ell != 4) throw Error("greedy_decompose needs ell in {3,4}");
  GreedyDecomposition out;
  std::uint64_t rest = b;
  for (unsigned i = 0; i < ell; ++i) {
    const std::uint64_t x = floor_root(ell, rest);
    out.parts.push_back(x);
    rest -= *checked_pow(x, ell);
  }
  out.n = b - rest;
  return out;
}

bool greedy_bound_holds(std::uint64_t b, std::uint64_t n) {
  if (n > b) return false;
  return pow(from_u64(b - n), 27) < pow(BigInt(25), 27) * pow(from_u64(b), 8);
}

std::vector<GapRun> find_gap_runs(const RepTable& table,
                                  std::uint64_t min_length) {
  if (min_length == 0) throw Error("min_length must be positive");
  std::vector<GapRun> runs;
  auto counts = table.counts();
  std::uint64_t n = 0;
  while (n < counts.size()) {
    if (counts[n] != 0) {
      ++n;
      continue;
    }
    const std::uint64_t start = n;
    while (n < counts.size() && counts[n] == 0) ++n;
    const std::uint64_t length = n - start;
    if (length >= min_length)
      runs.push_back({start, length, n == counts.size()});
  }
  return runs;
}

std::uint64_t window_length(std::uint64_t a, unsigned long p, unsigned long q) {
  if (a == 0) return 0;
  // d^q < a^p  <=>  d <= floor_root_q(a^p - 1)
  BigInt top = pow(from_u64(a), p) - 1;
  return to_u64(floor_root(q, top)) + 1;
}

ExceptionalSet scan_exceptional_set(std::uint64_t limit, const Rational& epsilon,
                                    const RepTable& table) {
  if (table.params() != WaringParams{4, 4})
    throw Error("exceptional set scan needs an r_{4,4} table");
  if (limit == 0) throw Error("limit must be positive");
  if (!table.covers(limit)) throw Error("table does not cover the scan limit");
  if (epsilon < 0) throw Error("epsilon must be nonnegative");
  ExceptionalSet out;
  out.limit = limit;
  out.exponent = make_rational(4059, 16384) + epsilon;
  if (out.exponent >= 1) throw Error("exponent 4059/16384 + epsilon must be < 1");
  const unsigned long p = out.exponent.get_num().get_ui();
  const unsigned long q = out.exponent.get_den().get_ui();
  if (out.exponent.get_num() != p || out.exponent.get_den() != q)
    throw Error("epsilon has too large a numerator or denominator");

  // window(a) = #{d >= 0 : d^q < a^p} is nondecreasing in a; the value d
  // enters the window at the first a with a^p > d^q.
  std::uint64_t window = 1;  // d = 0
  auto entry_point = [&](std::uint64_t d) -> BigInt {
    return floor_root(p, pow(from_u64(d), q)) + 1;
  };
  BigInt next_entry = entry_point(1);
  std::uint64_t zero_run = 0;  // zeros ending at a
  for (std::uint64_t a = 1; a <= limit; ++a) {
    while (next_entry <= from_u64(a)) {
      ++window;
      next_entry = entry_point(window);
    }
    zero_run = table[a] == 0 ? zero_run + 1 : 0;
    if (zero_run >= window) out.members.push_back(a);
  }
  out.density = make_rational(from_u64(out.members.size()), from_u64(limit));
  return out;
}

void write_csv(const RepTable& table, std::ostream& out) {
  out << "n,count\n";
  auto counts = table.counts();
  for (std::size_t n = 0; n < counts.size(); ++n)
    out << n << ',' << counts[n] << '\n';
}

namespace {

void put_le(std::ostream& out, std::uint64_t v, unsigned width) {
  std::array<char, 8> buf{};
  for (unsigned i = 0; i < width; ++i)
    buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf.data(), width);
}

std::uint64_t get_le(std::istream& in, unsigned width) {
  std::array<unsigned char, 8> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), width);
  if (!in) throw Error("truncated WRT1 stream");
  std::uint64_t v = 0;
  for (unsigned i = 0; i < width; ++i) v |= std::uint64_t{buf[i]} << (8 * i);
  return v;
}

}  // namespace

void write_binary(const RepTable& table, std::ostream& out) {
  out.write("WRT1", 4);
  put_le(out, table.params().ell, 8);
  put_le(out, table.params().s, 8);
  put_le(out, table.limit(), 8);
  put_le(out, table.byte_width(), 8);
  for (auto c : table.counts()) put_le(out, c, table.byte_width());
}

RepTable read_binary(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "WRT1") throw Error("missing WRT1 magic");
  const auto ell = get_le(in, 8);
  const auto s = get_le(in, 8);
  const auto limit = get_le(in, 8);
  const auto width = get_le(in, 8);
  if (ell > 4 || s > 4 || width > 8) throw Error("corrupt WRT1 header");
  auto params = WaringParams::make(static_cast<unsigned>(ell), static_cast<unsigned>(s));
  if (width != 1 && width != 2 && width != 4 && width != 8)
    throw Error("corrupt WRT1 byte width");
  RepTable::required_width(params, limit);
  std::vector<std::uint64_t> counts;
  counts.reserve(std::min<std::uint64_t>(limit + 1, 1u << 20));
  for (std::uint64_t n = 0; n <= limit; ++n)
    counts.push_back(get_le(in, static_cast<unsigned>(width)));
  return RepTable(params, limit, std::move(counts), static_cast<unsigned>(width));
}

}  // namespace waring_gaps
