#pragma once

#include <functional>

namespace vkstab {

// Worker count: VKSTAB_THREADS if set and positive, else hardware concurrency.
int thread_count();

// Runs body(i) for i in [0, n) on up to thread_count() threads. The first
// exception thrown by any task is rethrown after all tasks finish.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace vkstab
