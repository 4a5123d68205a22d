#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace styloprof {

// Index-partitioned parallel loop. Workers write results keyed by index, so
// the merged output is identical for any worker count.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  if (jobs <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  jobs = std::min<std::size_t>(jobs, n);
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (unsigned w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w]() {
      for (std::size_t i = w; i < n; i += jobs) fn(i);
    });
  }
  for (auto& t : workers) t.join();
}

}  // namespace styloprof
