#pragma once

#include <functional>

namespace coc {

/// Worker cap: COC_THREADS when set (clamped to >= 1), else the hardware
/// concurrency. Read once per process.
int thread_count();

/// Runs fn(i) for i in [0, n), spreading indices over up to thread_count()
/// workers. Callers must write results into per-index slots; given that, the
/// output is independent of scheduling.
void parallel_for(int n, const std::function<void(int)>& fn);

} // namespace coc
