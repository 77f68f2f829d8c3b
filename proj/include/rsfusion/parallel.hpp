#pragma once

#include <functional>

namespace rsfusion {

/// Worker count: FUSE_THREADS when set to a positive integer, else hardware concurrency.
int worker_count();

/// Runs body(y) for every row in [0, rows). Rows are split into contiguous blocks,
/// so results are identical for any worker count as long as body only writes row y.
void parallel_rows(int rows, const std::function<void(int)>& body);

}  // namespace rsfusion
