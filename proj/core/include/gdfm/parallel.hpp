#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "gdfm/types.hpp"

namespace gdfm {

/// Calls body(i) for i in [0, count) on up to `threads` workers. Work is
/// handed out through an atomic counter; callers write results by index so
/// the outcome does not depend on scheduling. The first exception thrown by
/// any call is rethrown after all workers finish.
template <typename Body>
void parallel_for(Index count, Index threads, Body&& body) {
  const Index workers = std::max<Index>(1, std::min(threads, count));
  if (workers == 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (Index w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (Index i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Hardware concurrency with a floor of one.
inline Index default_threads() {
  return std::max<Index>(1, static_cast<Index>(std::thread::hardware_concurrency()));
}

}  // namespace gdfm
