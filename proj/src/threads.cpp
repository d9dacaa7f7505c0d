#include "probe/threads.hpp"

#include <omp.h>

#include <atomic>
#include <cstdlib>

namespace probe {

namespace {
std::atomic<int> g_override{0};
}

int worker_threads() {
    const int ov = g_override.load(std::memory_order_relaxed);
    if (ov > 0) return ov;
    if (const char* env = std::getenv("CONFLICT_PROBE_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return omp_get_max_threads();
}

void set_worker_threads(int n) { g_override.store(n > 0 ? n : 0, std::memory_order_relaxed); }

}  // namespace probe
