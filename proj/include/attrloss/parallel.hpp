#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace attrloss {

/// Worker count for parallel loops. Defaults to 1 (bitwise-reproducible runs
/// need no care at all then); ATTRLOSS_THREADS raises it. Every parallel loop
/// in this project writes disjoint output slots and reduces in index order,
/// so results are identical for any worker count.
int worker_count();

/// Overrides the environment-derived worker count (used by the benchmark).
void set_worker_count(int n);

/// Static-schedule parallel map over [0, n). The body must only write state
/// owned by iteration i.
template <typename Fn>
void parallel_for(std::int64_t n, Fn&& fn) {
#ifdef _OPENMP
  const int workers = worker_count();
  if (workers > 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(workers)
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
#endif
  for (std::int64_t i = 0; i < n; ++i) fn(i);
}

}  // namespace attrloss
