#include "matchkit/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace matchkit {
namespace {

std::atomic<std::size_t> g_override{0};
thread_local bool t_in_parallel = false;

// Marks the current thread as running inside a parallel region; nested
// regions then run serially on the calling thread.
class RegionGuard {
 public:
  RegionGuard() : previous_(t_in_parallel) { t_in_parallel = true; }
  ~RegionGuard() { t_in_parallel = previous_; }

 private:
  bool previous_;
};

std::size_t env_threads() {
  const char* raw = std::getenv("MATCHKIT_THREADS");
  if (raw == nullptr) return 0;
  std::size_t value = 0;
  const char* end = raw + std::strlen(raw);
  auto [ptr, ec] = std::from_chars(raw, end, value);
  if (ec != std::errc{} || ptr != end) return 0;
  return value;
}

}  // namespace

std::size_t thread_count() {
  if (const auto o = g_override.load(); o > 0) return o;
  if (const auto e = env_threads(); e > 0) return e;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void set_thread_count(std::size_t threads) { g_override.store(threads); }

void parallel_chunks(std::size_t n, std::size_t chunks,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  chunks = std::clamp<std::size_t>(chunks, 1, n);
  const std::size_t workers = t_in_parallel ? 1 : std::min(chunks, thread_count());
  auto bounds = [&](std::size_t c) { return std::pair{c * n / chunks, (c + 1) * n / chunks}; };

  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) {
      const auto [b, e] = bounds(c);
      body(b, e, c);
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    RegionGuard guard;
    for (std::size_t c; (c = next.fetch_add(1)) < chunks;) {
      try {
        const auto [b, e] = bounds(c);
        body(b, e, c);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  parallel_chunks(n, std::min(n, thread_count() * 4), [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) body(i);
  });
}

}  // namespace matchkit
