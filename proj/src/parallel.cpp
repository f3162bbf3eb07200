#include "occmeas/parallel.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace occmeas::par {

namespace {
std::atomic<bool> g_serial{false};
std::atomic<int> g_max_threads{0};
}  // namespace

void set_serial_reference(bool on) { g_serial.store(on); }
bool serial_reference() { return g_serial.load(); }

void set_max_threads(int n) { g_max_threads.store(n < 0 ? 0 : n); }
int max_threads() { return g_max_threads.load(); }

namespace detail {

void run_indexed(std::size_t n, void* ctx, void (*body)(void*, std::size_t)) {
#ifdef _OPENMP
  if (!serial_reference() && n > 1) {
    const int requested = max_threads();
    const int nthreads = requested > 0 ? requested : omp_get_max_threads();
    #pragma omp parallel for schedule(dynamic, 1) num_threads(nthreads)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      body(ctx, static_cast<std::size_t>(i));
    }
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) body(ctx, i);
}

}  // namespace detail

}  // namespace occmeas::par
