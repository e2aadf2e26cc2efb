#pragma once

#include <cstddef>
#include <functional>

namespace cbo {

// Worker cap shared by all parallel loops. 0 means hardware concurrency.
// Results are bit-identical for any setting: parallel regions only perform
// independent writes, never reductions.
void set_worker_count(unsigned n);
unsigned worker_count();

// Runs fn(begin, end) over a partition of [0, n). Falls back to a single
// serial call when n is small or one worker is configured.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace cbo
