#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace bogo {

// Worker count: BOGO_THREADS if set and positive, else hardware concurrency.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BOGO_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v > 0) return unsigned(std::min<long>(v, 256));
  }
  return hw;
}

// Runs body(i) for i in [0, n). Chunks are contiguous; small ranges run
// inline. Bodies must write to disjoint locations.
template <class Body>
void parallel_for(std::size_t n, Body&& body, std::size_t min_chunk = 4096) {
  unsigned workers = worker_count();
  if (workers <= 1 || n < 2 * min_chunk) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::size_t nchunks = std::min<std::size_t>(workers, n / min_chunk);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(nchunks);
  for (std::size_t c = 0; c < nchunks; ++c) {
    std::size_t lo = n * c / nchunks, hi = n * (c + 1) / nchunks;
    pool.emplace_back([&, lo, hi, c] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errs[c] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace bogo
