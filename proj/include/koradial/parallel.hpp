#pragma once

#include <functional>
#include <vector>

namespace koradial {

/// Worker cap: KORADIAL_THREADS if set and positive, else the hardware count.
unsigned thread_cap();

/// Runs every task, using at most thread_cap() threads. Rethrows the first
/// exception after all tasks have finished.
void parallel_invoke(const std::vector<std::function<void()>>& tasks);

}  // namespace koradial
