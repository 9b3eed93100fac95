#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "cbi/simulate.hpp"

namespace cbi::detail {

// Static contiguous partition of [0, n); results land in caller-owned slots,
// so output does not depend on scheduling.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  std::size_t w = std::min(worker_count(), std::max<std::size_t>(n, 1));
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex m;
  std::size_t chunk = (n + w - 1) / w;
  for (std::size_t k = 0; k < w; ++k) {
    pool.emplace_back([&, k] {
      try {
        for (std::size_t i = k * chunk; i < std::min(n, (k + 1) * chunk); ++i) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(m);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace cbi::detail
