#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace vsseg {

// Runs body(i) for i in [0, n). Work items must be independent and write to
// disjoint locations; outputs are then identical for any thread count.
template <typename Body>
void parallel_for(std::int64_t n, Body&& body) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw < 2 || n < 4) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::int64_t workers = std::min<std::int64_t>(hw, n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (std::int64_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::int64_t i = w; i < n; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace vsseg
