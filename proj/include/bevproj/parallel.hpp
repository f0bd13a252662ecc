#pragma once

#include <cstddef>
#include <functional>

namespace bevproj {

// Worker cap for parallel_for. Defaults to 1; the CLI raises it via
// --threads. Outputs must not depend on this value.
int thread_count();
void set_thread_count(int n);

/// Runs body(begin, end) over contiguous chunks of [0, n), one chunk per
/// worker. Chunks write disjoint state, so any worker count reproduces
/// the serial result bit for bit.
void parallel_for(size_t n, const std::function<void(size_t, size_t)>& body);

}  // namespace bevproj
