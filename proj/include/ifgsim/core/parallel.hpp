#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ifgsim::parallel {

namespace detail {
inline std::atomic<unsigned>& thread_count_storage() {
  static std::atomic<unsigned> count{1};
  return count;
}
} // namespace detail

/// Number of worker threads used by `for_each_index`. Work is partitioned by
/// index and every index is computed by the same code path, so results never
/// depend on this value.
inline unsigned thread_count() { return detail::thread_count_storage().load(); }

inline void set_thread_count(unsigned n) {
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  detail::thread_count_storage().store(n);
}

/// Calls fn(i) for i in [0, count). Indices are split into contiguous blocks,
/// one per worker. The first exception thrown by any worker is rethrown.
template <class Fn>
void for_each_index(std::size_t count, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t block = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * block;
    const std::size_t end = std::min(count, begin + block);
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

} // namespace ifgsim::parallel
