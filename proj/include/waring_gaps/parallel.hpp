// Deterministic fork/join over contiguous index ranges.
//
// Work is split into contiguous chunks whose boundaries depend only on the
// range and the chunk count; callers write results into per-index or
// per-chunk slots, so the assembled output never depends on scheduling.
#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace waring_gaps {

/// Worker cap: an explicit override, else WARING_GAPS_THREADS, else 1.
unsigned thread_count();
void set_thread_count(unsigned threads);  // 0 restores the default lookup

/// Calls fn(chunk_begin, chunk_end, chunk_index) over [begin, end).
template <class Fn>
void parallel_chunks(std::size_t begin, std::size_t end, std::size_t chunks,
                     Fn&& fn) {
  if (end <= begin) return;
  const std::size_t n = end - begin;
  chunks = std::clamp<std::size_t>(chunks, 1, n);
  auto bound = [&](std::size_t c) { return begin + n * c / chunks; };
  const unsigned workers = std::min<std::size_t>(thread_count(), chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) fn(bound(c), bound(c + 1), c);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t c = w; c < chunks; c += workers)
          fn(bound(c), bound(c + 1), c);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Chunk count used by the library's sweeps for a range of size n.
inline std::size_t default_chunks(std::size_t n) {
  return std::max<std::size_t>(1, std::min<std::size_t>(n / 4096 + 1, 64));
}

}  // namespace waring_gaps
