#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace riplab {

/// Number of worker threads: RIPLAB_THREADS if set and positive, otherwise
/// the hardware concurrency. Results never depend on this value; work items
/// write to disjoint slots indexed by their own position.
inline unsigned thread_budget() {
  if (const char* env = std::getenv("RIPLAB_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed > 0) return static_cast<unsigned>(parsed);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

/// Run body(i) for i in [0, count) across the thread budget. Static striping
/// keeps the assignment deterministic; the body must only touch state owned
/// by index i.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const unsigned workers = std::min<std::size_t>(thread_budget(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace riplab
