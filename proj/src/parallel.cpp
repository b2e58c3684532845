#include "waring_gaps/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace waring_gaps {
namespace {
std::atomic<unsigned> override_threads{0};
}

unsigned thread_count() {
  if (unsigned t = override_threads.load()) return t;
  if (const char* env = std::getenv("WARING_GAPS_THREADS")) {
    try {
      long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  return 1;
}

void set_thread_count(unsigned threads) { override_threads.store(threads); }

}  // namespace waring_gaps
