// SPDX-FileCopyrightText: 2026 the occkit authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace occkit {

// Thread cap for the data-parallel kernels. 0 = hardware default.
void set_thread_count(int n);
int thread_count();

// Sum f(0) + f(1) + ... + f(n-1) with a fixed reduction tree.
//
// The index space is cut into fixed-size blocks, each block is summed
// serially in index order, and the block partials are combined pairwise.
// The tree depends only on n, never on the schedule or thread count, so
// repeated runs are bit-identical.
namespace detail {

inline double pairwise_combine(std::vector<double>& partials) {
  std::size_t count = partials.size();
  if (count == 0) return 0.0;
  while (count > 1) {
    const std::size_t half = count / 2;
    for (std::size_t i = 0; i < half; ++i) {
      partials[i] = partials[2 * i] + partials[2 * i + 1];
    }
    if (count % 2 != 0) {
      partials[half] = partials[count - 1];
      count = half + 1;
    } else {
      count = half;
    }
  }
  return partials[0];
}

}  // namespace detail

inline constexpr std::size_t kReductionBlock = 4096;

template <typename Fn>
double deterministic_sum(std::size_t n, Fn&& term) {
  if (n == 0) return 0.0;
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partials(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(blocks); ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t end = begin + kReductionBlock < n ? begin + kReductionBlock : n;
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) acc += term(i);
    partials[static_cast<std::size_t>(b)] = acc;
  }
  return detail::pairwise_combine(partials);
}

}  // namespace occkit
