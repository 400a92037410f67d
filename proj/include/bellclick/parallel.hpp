#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace bellclick::detail {

// Runs fn(job) for job in [0, jobs) on up to `workers` threads.
template <typename Fn>
void parallel_for(std::uint64_t jobs, unsigned workers, Fn&& fn) {
  const auto n_threads = static_cast<unsigned>(
      std::min<std::uint64_t>(std::max(workers, 1u), std::max<std::uint64_t>(jobs, 1)));
  if (n_threads <= 1) {
    for (std::uint64_t j = 0; j < jobs; ++j) fn(j);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(n_threads);
  for (unsigned t = 0; t < n_threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::uint64_t j = t; j < jobs; j += n_threads) fn(j);
    });
  }
}

}  // namespace bellclick::detail
