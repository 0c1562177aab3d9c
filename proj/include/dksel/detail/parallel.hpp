// Copyright (C) 2026 The dksel authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace dksel::detail {

// Worker cap for data-parallel loops. Comes from DKSEL_THREADS; absent means
// single-threaded. Can be overridden programmatically (CLI --threads).
inline unsigned& thread_cap_ref() {
  static unsigned cap = [] {
    const char* env = std::getenv("DKSEL_THREADS");
    if (env == nullptr) return 1u;
    long v = std::strtol(env, nullptr, 10);
    if (v < 1) return 1u;
    return static_cast<unsigned>(std::min<long>(v, 256));
  }();
  return cap;
}

inline unsigned thread_cap() { return thread_cap_ref(); }
inline void set_thread_cap(unsigned cap) { thread_cap_ref() = cap < 1 ? 1u : cap; }

// Runs fn(begin, end) over contiguous chunks of [0, count). Chunk boundaries
// depend only on count and the cap, and each output element is written by
// exactly one worker, so results never depend on scheduling. fn must not
// throw when workers > 1.
template <class Fn>
inline void parallel_chunks(std::size_t count, Fn&& fn) {
  constexpr std::size_t kMinChunk = 2048;
  unsigned workers = thread_cap();
  if (workers > 1) {
    workers = static_cast<unsigned>(
        std::min<std::size_t>(workers, (count + kMinChunk - 1) / kMinChunk));
  }
  if (workers <= 1) {
    fn(std::size_t{0}, count);
    return;
  }
  const std::size_t chunk = (count + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) {
    std::size_t begin = w * chunk;
    std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(std::size_t{0}, std::min(count, chunk));
  for (auto& t : pool) t.join();
}

}  // namespace dksel::detail
