#pragma once
// Fixed-size worker pool. Work is split into tasks whose boundaries do not
// depend on the number of workers, so reductions over task results are
// bit-identical for any thread count.

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace snl {

class ThreadPool {
 public:
  explicit ThreadPool(std::size_t workers);
  ~ThreadPool();
  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  std::size_t size() const noexcept { return workers_.size() + 1; }

  // Runs fn(task) for task in [0, tasks); the calling thread participates.
  void run(std::size_t tasks, const std::function<void(std::size_t)>& fn);

 private:
  void worker_loop();

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t)>* job_ = nullptr;
  std::size_t tasks_ = 0;
  std::size_t next_ = 0;
  std::size_t finished_ = 0;
  std::size_t generation_ = 0;
  bool stop_ = false;
};

// Worker count from SNL_THREADS, else hardware concurrency.
std::size_t configured_threads();

// Process-wide pool sized by configured_threads().
ThreadPool& default_pool();

}  // namespace snl
