#include "qdplan/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qdplan {

int resolve_threads(int threads) {
  if (threads > 0) return threads;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void for_each_index_serial(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
  for (std::int64_t i = 0; i < n; ++i) fn(i);
}

void for_each_index(std::int64_t n, int threads, const std::function<void(std::int64_t)>& fn) {
  int t = resolve_threads(threads);
  if (t <= 1 || n <= 1) {
    for_each_index_serial(n, fn);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(t)
  for (std::int64_t i = 0; i < n; ++i) fn(i);
#else
  for_each_index_serial(n, fn);
#endif
}

}  // namespace qdplan
