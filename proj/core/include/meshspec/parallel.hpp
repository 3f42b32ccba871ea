#pragma once

#include <functional>

namespace meshspec {

/// Process-wide worker count for parallel_for. 1 means fully serial
/// execution; 0 resets to the hardware default.
void set_thread_count(int n);
int thread_count();

/// Static partition of [begin, end) across the configured workers. Each
/// index is handled exactly once and results must be written to
/// per-index slots, which keeps every caller deterministic regardless of
/// the schedule.
void parallel_for(int begin, int end, const std::function<void(int)>& body);

}  // namespace meshspec
