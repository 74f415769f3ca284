#pragma once

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>

namespace treebed {

/// Thread count to use: an explicit request wins, otherwise TREEBED_THREADS, otherwise the
/// hardware concurrency. 0 in either place means "auto".
inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("TREEBED_THREADS")) {
    try {
      long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Counts helper threads that may still be started; the caller's own thread is not counted.
class ThreadBudget {
 public:
  explicit ThreadBudget(unsigned threads) : spare_(threads > 0 ? static_cast<int>(threads) - 1 : 0) {}

  bool try_acquire() {
    int cur = spare_.load(std::memory_order_relaxed);
    while (cur > 0) {
      if (spare_.compare_exchange_weak(cur, cur - 1, std::memory_order_acq_rel)) return true;
    }
    return false;
  }
  void release() { spare_.fetch_add(1, std::memory_order_acq_rel); }

 private:
  std::atomic<int> spare_;
};

}  // namespace treebed
