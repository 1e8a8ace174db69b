// Copyright (c) 2026 casdyf authors
// SPDX-License-Identifier: Apache-2.0

#include "casdyf/threading.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace casdyf {

int max_threads() {
  static const int cached = [] {
    const char* env = std::getenv("CASDYF_THREADS");
    if (!env) return 1;
    int v = std::atoi(env);
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    return std::clamp(v, 1, hw);
  }();
  return cached;
}

void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t)>& fn) {
  const std::int64_t count = end - begin;
  if (count <= 0) return;
  const int threads = static_cast<int>(std::min<std::int64_t>(max_threads(), count));
  if (threads == 1) {
    for (std::int64_t i = begin; i < end; ++i) fn(i);
    return;
  }
  // static block partition: worker t owns [begin + t*chunk, ...)
  const std::int64_t chunk = (count + threads - 1) / threads;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    const std::int64_t lo = begin + t * chunk;
    const std::int64_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] {
      for (std::int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace casdyf
