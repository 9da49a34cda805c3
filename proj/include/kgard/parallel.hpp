#pragma once

#include <cstddef>
#include <functional>

namespace kgard {

/// 0 means one worker per hardware thread.
std::size_t resolve_threads(std::size_t requested);

/// Runs body(i) for every i in [0, count) on up to `threads` workers. Items are
/// claimed from a shared counter; callers write results by index. The first
/// exception thrown by `body` is rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace kgard
