#pragma once

#include <cstddef>
#include <functional>

namespace spsdr {

/// Worker count: SPSDR_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t thread_count();

/// Runs body(i) for i in [0, count) on up to `threads` workers. Work items must
/// be independent; the first exception thrown is rethrown after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t threads = thread_count());

}  // namespace spsdr
