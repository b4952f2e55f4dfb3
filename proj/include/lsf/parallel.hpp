#pragma once

#include <cstddef>
#include <functional>

namespace lsf {

/// Worker cap from the LSF_THREADS environment variable; falls back to the
/// machine's hardware concurrency when unset or unparsable.
int worker_thread_cap();

/// Runs fn(i) for i in [0, n). Splits the range across worker threads when
/// the cap allows; each index is visited exactly once, so disjoint writes
/// keyed by index stay deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace lsf
