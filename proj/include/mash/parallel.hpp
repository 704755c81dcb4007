#pragma once

#include <cstddef>
#include <functional>

namespace mash {

/// Worker count for internal loops. 0 means all available cores.
void set_thread_count(int threads);
int thread_count();

/// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
/// write to disjoint slots so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace mash
