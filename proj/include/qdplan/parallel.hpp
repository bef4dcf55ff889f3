#pragma once

#include <cstdint>
#include <functional>

namespace qdplan {

// Number of worker threads a `threads` setting resolves to (0 = all hardware threads).
int resolve_threads(int threads);

// Serial reference loop. Kept as its own entry point so tests and the
// benchmark can compare it against the OpenMP path.
void for_each_index_serial(std::int64_t n, const std::function<void(std::int64_t)>& fn);

// Runs fn(i) for i in [0, n). threads > 1 uses an OpenMP parallel-for;
// threads == 1 is exactly the serial reference. fn must write only to
// per-index slots; under that contract results are identical for any thread
// count, which is what makes buffered batch evaluation deterministic.
void for_each_index(std::int64_t n, int threads, const std::function<void(std::int64_t)>& fn);

}  // namespace qdplan
