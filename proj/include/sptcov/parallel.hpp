#pragma once

#include <cstddef>
#include <vector>

#include "sptcov/types.hpp"

namespace sptcov {

/// Sets the worker count for internal parallel loops (0 = leave the OpenMP default).
void set_thread_count(int threads);
int thread_count();

/// Sum of f(i) over i in [0, n). Items are grouped in fixed-size blocks that
/// are evaluated concurrently and then added in block order, so the result is
/// bitwise independent of the thread count.
template <class T, class F>
T ordered_sum(Index n, const T& zero, F&& f) {
  constexpr Index kBlock = 8;
  const Index blocks = (n + kBlock - 1) / kBlock;
  std::vector<T> partial(static_cast<std::size_t>(blocks), zero);
#pragma omp parallel for schedule(dynamic, 1)
  for (Index b = 0; b < blocks; ++b) {
    T acc = zero;
    const Index end = std::min(n, (b + 1) * kBlock);
    for (Index i = b * kBlock; i < end; ++i) acc += f(i);
    partial[static_cast<std::size_t>(b)] = std::move(acc);
  }
  T total = zero;
  for (auto& p : partial) total += p;
  return total;
}

/// Runs f(i) for i in [0, n) concurrently. f must only write to slot i.
template <class F>
void parallel_for(Index n, F&& f) {
#pragma omp parallel for schedule(dynamic, 1)
  for (Index i = 0; i < n; ++i) f(i);
}

}  // namespace sptcov
