#include "kgalign/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace kgalign {

namespace {

int threads_from_env() {
  if (const char* env = std::getenv("KGALIGN_THREADS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (...) {
    }
  }
  return 1;
}

std::atomic<int>& thread_setting() {
  static std::atomic<int> n{threads_from_env()};
  return n;
}

}  // namespace

int num_threads() { return thread_setting().load(); }

void set_num_threads(int n) { thread_setting().store(std::max(1, n)); }

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body) {
  const auto workers = static_cast<std::int64_t>(std::min<std::int64_t>(num_threads(), n));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (std::int64_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::int64_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace kgalign
