#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace bandedge {

/// Process-wide worker count used by the sweep helpers. 0 means
/// std::thread::hardware_concurrency().
void set_thread_count(unsigned count);
unsigned thread_count();

namespace detail {
// Set inside parallel_map workers; nested maps then run inline.
inline thread_local bool in_parallel_worker = false;
}

/// Evaluates fn(i) for i in [0, n) and returns the results in index order.
/// Work distribution is dynamic but every result lands in its own slot, so the
/// output does not depend on scheduling.
template <typename Fn>
auto parallel_map(std::size_t n, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using Result = decltype(fn(std::size_t{}));
  std::vector<Result> out;
  out.reserve(n);
  const unsigned workers = detail::in_parallel_worker ? 1u : static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
    return out;
  }

  std::vector<std::optional<Result>> slots(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&] {
    detail::in_parallel_worker = true;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

}  // namespace bandedge
