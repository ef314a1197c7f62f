#pragma once

#include <cstddef>
#include <functional>

namespace mlmcuq {

/// Static-partition fork/join over index ranges. Each worker receives one
/// contiguous block, so any computation that writes results by index is
/// independent of the worker count.
class WorkerPool {
 public:
  explicit WorkerPool(unsigned workers = 1);

  static const WorkerPool& serial();

  unsigned workers() const noexcept { return workers_; }

  /// Calls body(begin, end) on disjoint blocks covering [0, n). Rethrows the
  /// first exception (lowest block index) after all workers joined.
  void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) const;

 private:
  unsigned workers_;
};

}  // namespace mlmcuq
