#include "nclab/parallel.hpp"

#include <atomic>

namespace nclab {

namespace {
std::atomic<unsigned> g_threads{1};
}

void set_thread_count(unsigned n) {
    g_threads = n == 0 ? std::max(1u, std::thread::hardware_concurrency()) : n;
}

unsigned thread_count() { return g_threads; }

}  // namespace nclab
