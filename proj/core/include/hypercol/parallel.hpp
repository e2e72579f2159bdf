#pragma once

#include <cstddef>
#include <functional>

namespace hypercol {

/// Number of worker threads used by parallel sections.
///
/// Resolution order: the value passed to set_thread_count() if non-zero,
/// then the HYPERCOL_THREADS environment variable if set and non-zero,
/// then std::thread::hardware_concurrency().
std::size_t thread_count();

/// Overrides the worker count; 0 restores automatic resolution.
void set_thread_count(std::size_t n);

/// Runs task(i) for every i in [0, n), possibly concurrently.
///
/// Tasks must only write to state owned by their index; every caller in
/// this library reduces per-index results afterwards in index order, which
/// keeps outputs independent of the worker count. The first exception
/// thrown (lowest index among failures) is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task);

/// RAII override of the worker count, restoring the previous value on exit.
class ScopedThreadCount {
 public:
  explicit ScopedThreadCount(std::size_t n);
  ~ScopedThreadCount();
  ScopedThreadCount(const ScopedThreadCount&) = delete;
  ScopedThreadCount& operator=(const ScopedThreadCount&) = delete;

 private:
  std::size_t previous_;
};

}  // namespace hypercol
