#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "hjprox/core.hpp"

namespace hjprox {

/// Worker budget for data-parallel loops: HJPROX_THREADS if set (minimum 1),
/// otherwise the hardware concurrency.
inline int thread_budget() {
  if (const char* env = std::getenv("HJPROX_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs body(i) for i in [0, n) across up to thread_budget() threads using a
/// static block partition. Results must be written to disjoint slots so the
/// outcome is identical to the sequential order.
inline void parallel_for(Index n, const std::function<void(Index)>& body) {
  if (n <= 0) return;
  const int workers =
      static_cast<int>(std::min<Index>(n, thread_budget()));
  if (workers <= 1) {
    for (Index i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  const Index chunk = (n + workers - 1) / workers;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    const Index begin = w * chunk;
    const Index end = std::min<Index>(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end]() {
      try {
        for (Index i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace hjprox
