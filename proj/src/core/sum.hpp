#pragma once

#include <cstddef>

namespace vsseg {

// Pairwise (cascade) summation with a fixed recursion tree. The split points
// depend only on the element count, so the result is bit-identical no matter
// how the surrounding code is threaded.
template <typename F>
double pairwise_sum(std::size_t begin, std::size_t end, F&& value) {
  const std::size_t n = end - begin;
  if (n <= 64) {
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) acc += value(i);
    return acc;
  }
  const std::size_t mid = begin + n / 2;
  return pairwise_sum(begin, mid, value) + pairwise_sum(mid, end, value);
}

template <typename F>
double pairwise_sum(std::size_t n, F&& value) {
  return pairwise_sum<F>(0, n, static_cast<F&&>(value));
}

}  // namespace vsseg
