#pragma once

#include <cstddef>
#include <memory>

#include <tbb/blocked_range.h>
#include <tbb/global_control.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

namespace stedeflick {

/// Fixed-size worker pool. Every parallel loop in the library writes each
/// index to its own output slot, so results never depend on the thread count.
class Executor {
 public:
  /// `threads` == 0 picks the hardware concurrency.
  explicit Executor(int threads = 0);

  int threads() const noexcept { return threads_; }

  template <class Body>
  void parallel_for(std::size_t count, Body&& body) const {
    if (count == 0) return;
    if (threads_ == 1 || count == 1) {
      for (std::size_t i = 0; i < count; ++i) body(i);
      return;
    }
    arena_->execute([&] {
      tbb::parallel_for(tbb::blocked_range<std::size_t>(0, count),
                        [&](const tbb::blocked_range<std::size_t>& range) {
                          for (std::size_t i = range.begin(); i != range.end(); ++i) body(i);
                        });
    });
  }

 private:
  int threads_;
  std::unique_ptr<tbb::global_control> control_;
  std::unique_ptr<tbb::task_arena> arena_;
};

/// Thread count from STE_DEFLICK_THREADS, or 0 when unset or unparsable.
int threads_from_environment();

}  // namespace stedeflick
