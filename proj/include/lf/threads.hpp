#pragma once

namespace lf {

// Global worker count for the OpenMP kernels. 0 selects the hardware default.
// All kernels produce bit-identical results for any thread count: every output
// element is written by exactly one thread and accumulated in a fixed order.
void set_thread_count(int n);
int thread_count();

}  // namespace lf
