#include "mlmcuq/parallel.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace mlmcuq {

WorkerPool::WorkerPool(unsigned workers) : workers_(std::max(1u, workers)) {}

const WorkerPool& WorkerPool::serial() {
  static const WorkerPool pool(1);
  return pool;
}

void WorkerPool::parallel_for(std::size_t n,
                              const std::function<void(std::size_t, std::size_t)>& body) const {
  if (n == 0) return;
  const std::size_t blocks = std::min<std::size_t>(workers_, n);
  if (blocks == 1) {
    body(0, n);
    return;
  }
  std::vector<std::exception_ptr> errors(blocks);
  std::vector<std::thread> threads;
  threads.reserve(blocks - 1);
  auto run = [&](std::size_t b) {
    const std::size_t begin = n * b / blocks;
    const std::size_t end = n * (b + 1) / blocks;
    try {
      body(begin, end);
    } catch (...) {
      errors[b] = std::current_exception();
    }
  };
  for (std::size_t b = 1; b < blocks; ++b) threads.emplace_back(run, b);
  run(0);
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace mlmcuq
