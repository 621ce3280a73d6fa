#include "marlns/parallel.hpp"

#include <atomic>

namespace marlns {

namespace {
std::atomic<ExecMode> g_mode{ExecMode::OpenMP};
}

ExecMode exec_mode() { return g_mode.load(std::memory_order_relaxed); }

void set_exec_mode(ExecMode mode) { g_mode.store(mode, std::memory_order_relaxed); }

int exec_threads() {
#ifdef _OPENMP
    if (exec_mode() == ExecMode::OpenMP) return omp_get_max_threads();
#endif
    return 1;
}

}  // namespace marlns
