#include "mash/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#ifdef MASH_HAVE_OPENMP
#include <omp.h>
#endif

namespace mash {
namespace {
std::atomic<int> g_threads{0};
}

void set_thread_count(int threads) { g_threads = threads < 0 ? 0 : threads; }

int thread_count() {
  const int t = g_threads.load();
  if (t > 0) return t;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const int threads = thread_count();
#ifdef MASH_HAVE_OPENMP
  if (threads > 1 && n > 1) {
    std::exception_ptr error;
    std::mutex error_mutex;
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads)
    for (long long i = 0; i < count; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    return;
  }
#endif
  (void)threads;
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace mash
