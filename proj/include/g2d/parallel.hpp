#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace g2d {

// Execution mode for the data-parallel kernels (rollout fan-out, batch
// gradients, evaluation). Serial is the reference path: both modes must
// produce bit-identical results, which the test suite checks. All
// reductions happen in index order regardless of mode.
enum class ExecMode { Serial, Parallel };

// Runs fn(i) for i in [0, n). Iterations must be independent.
template <class Fn>
void parallel_for(size_t n, ExecMode mode, Fn&& fn) {
#ifdef _OPENMP
  if (mode == ExecMode::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      fn(static_cast<size_t>(i));
    }
    return;
  }
#else
  (void)mode;
#endif
  for (size_t i = 0; i < n; ++i) fn(i);
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace g2d
