#include "stedeflick/executor.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <thread>

namespace stedeflick {

Executor::Executor(int threads) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads_ = threads;
  if (threads_ > 1) {
    // TBB caps parallelism at the core count unless told otherwise.
    control_ = std::make_unique<tbb::global_control>(
        tbb::global_control::max_allowed_parallelism, static_cast<std::size_t>(threads_));
    arena_ = std::make_unique<tbb::task_arena>(threads_);
  }
}

int threads_from_environment() {
  const char* raw = std::getenv("STE_DEFLICK_THREADS");
  if (raw == nullptr) return 0;
  int value = 0;
  const auto [end, ec] = std::from_chars(raw, raw + std::strlen(raw), value);
  if (ec != std::errc{} || *end != '\0' || value < 0) return 0;
  return value;
}

}  // namespace stedeflick
