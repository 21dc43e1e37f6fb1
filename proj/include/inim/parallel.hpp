#pragma once

#include <cstddef>

namespace inim {

/// Worker count for parallel loops. Reads INIM_THREADS once; 0 or unset
/// means use the hardware concurrency.
int thread_count();

/// Overrides the worker count for the rest of the process (0 = auto).
void set_thread_count(int threads);

/// Keeps large blocks (texture grids) on the heap between iterations instead
/// of returning them to the OS, avoiding page-fault churn. Process-wide; a
/// no-op outside glibc. Called by the executables, not by the library.
void tune_allocator();

}  // namespace inim
