#pragma once

// Deterministic fan-out: work is cut into fixed blocks whose results land in
// per-block slots, so reductions can run in block order no matter how many
// workers ran.

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace sighedge {

inline int default_threads() {
  if (const char* env = std::getenv("SIGHEDGE_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

inline int resolve_threads(int requested) { return requested > 0 ? requested : default_threads(); }

// Calls fn(block) for block in [0, n_blocks) on up to `threads` workers.
// The first exception (by block index) is rethrown.
template <class Fn>
void for_each_block(std::size_t n_blocks, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, resolve_threads(threads)));
  if (workers == 1 || n_blocks <= 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) fn(b);
    return;
  }
  std::vector<std::exception_ptr> errors(n_blocks);
  for (std::size_t wave = 0; wave < n_blocks; wave += workers) {
    const std::size_t end = std::min(n_blocks, wave + workers);
    std::vector<std::thread> pool;
    pool.reserve(end - wave);
    for (std::size_t b = wave; b < end; ++b)
      pool.emplace_back([&, b] {
        try {
          fn(b);
        } catch (...) {
          errors[b] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace sighedge
