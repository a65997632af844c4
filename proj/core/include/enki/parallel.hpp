#pragma once

#include <cstddef>
#include <functional>

namespace enki {

/// Worker count taken from ENKI_THREADS; defaults to 1 (the reproducibility
/// guarantee of the artifacts is stated for single-threaded runs).
int thread_count();

/// Applies fn to every index in [0, count). Results must be written to
/// disjoint slots; iteration order is unspecified when threaded. The first
/// exception thrown by any worker is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace enki
