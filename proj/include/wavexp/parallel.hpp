#pragma once

#include <cstdint>
#include <functional>

namespace wavexp {

/// Number of worker threads used by parallel_for. Defaults to the hardware
/// concurrency capped at 8. Thread count never changes results: every task
/// writes a disjoint output range, so execution is bitwise deterministic.
int num_threads();
void set_num_threads(int n);

/// Runs fn(i) for i in [0, n). Tasks are distributed in contiguous chunks;
/// with num_threads() == 1 (or n == 1) everything runs inline on the caller.
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

/// Static contiguous partition of [0, n) into parallel_chunk_count(n) chunks.
/// Calls fn(chunk, begin, end) once per chunk. The partition depends only on
/// n and the configured thread count, so per-chunk partial results reduced in
/// chunk order are reproducible run to run.
int parallel_chunk_count(int64_t n);
void parallel_chunks(int64_t n, const std::function<void(int, int64_t, int64_t)>& fn);

}  // namespace wavexp
