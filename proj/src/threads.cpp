#include "lf/threads.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lf {

namespace {
int g_threads = 0;
}

void set_thread_count(int n) {
    g_threads = n < 0 ? 0 : n;
#ifdef _OPENMP
    omp_set_num_threads(g_threads > 0 ? g_threads : omp_get_num_procs());
#endif
}

int thread_count() {
#ifdef _OPENMP
    return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace lf
