#include "nodectrl/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace nodectrl {

int effective_thread_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("NODECTRL_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

void parallel_chunks(std::size_t total, std::size_t chunk_count,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (total == 0) return;
  chunk_count = std::max<std::size_t>(1, std::min(chunk_count, total));
  const std::size_t per = (total + chunk_count - 1) / chunk_count;
  const int threads = std::min<int>(effective_thread_count(), static_cast<int>(chunk_count));

  if (threads <= 1) {
    for (std::size_t c = 0; c < chunk_count; ++c) {
      const std::size_t b = c * per, e = std::min(total, b + per);
      if (b < e) fn(c, b, e);
    }
    return;
  }

  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      for (std::size_t c = t; c < chunk_count; c += threads) {
        const std::size_t b = c * per, e = std::min(total, b + per);
        if (b < e) fn(c, b, e);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace nodectrl
