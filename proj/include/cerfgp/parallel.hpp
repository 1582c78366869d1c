#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace cerfgp {

/// Caps worker threads used by parallel_for (0 means hardware concurrency).
void set_thread_limit(unsigned threads);
unsigned thread_limit();

/// Runs body(i) for i in [0, n). Each index must write only its own output
/// slot, which makes results independent of scheduling. Nested calls run
/// serially on the calling thread. If any body throws, the exception from the
/// lowest failing index is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace cerfgp
