#include "snl/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>

namespace snl {

ThreadPool::ThreadPool(std::size_t workers) {
  const std::size_t extra = workers > 1 ? workers - 1 : 0;
  workers_.reserve(extra);
  for (std::size_t i = 0; i < extra; ++i) workers_.emplace_back([this] { worker_loop(); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  wake_.notify_all();
  for (auto& t : workers_) t.join();
}

void ThreadPool::run(std::size_t tasks, const std::function<void(std::size_t)>& fn) {
  if (tasks == 0) return;
  if (workers_.empty() || tasks == 1) {
    for (std::size_t t = 0; t < tasks; ++t) fn(t);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mu;
  const std::function<void(std::size_t)> guarded = [&](std::size_t t) {
    try {
      fn(t);
    } catch (...) {
      std::lock_guard lock(error_mu);
      if (!error) error = std::current_exception();
    }
  };
  {
    std::lock_guard lock(mu_);
    job_ = &guarded;
    tasks_ = tasks;
    next_ = 0;
    finished_ = 0;
    ++generation_;
  }
  wake_.notify_all();
  for (;;) {
    std::size_t t;
    {
      std::lock_guard lock(mu_);
      if (next_ >= tasks_) break;
      t = next_++;
    }
    guarded(t);
    std::lock_guard lock(mu_);
    if (++finished_ == tasks_) done_.notify_all();
  }
  {
    std::unique_lock lock(mu_);
    done_.wait(lock, [&] { return finished_ == tasks_; });
    job_ = nullptr;
  }
  if (error) std::rethrow_exception(error);
}

void ThreadPool::worker_loop() {
  std::size_t seen = 0;
  for (;;) {
    std::unique_lock lock(mu_);
    wake_.wait(lock, [&] { return stop_ || (generation_ != seen && job_ != nullptr && next_ < tasks_); });
    if (stop_) return;
    seen = generation_;
    while (job_ != nullptr && next_ < tasks_) {
      const std::size_t t = next_++;
      const auto* job = job_;
      lock.unlock();
      (*job)(t);
      lock.lock();
      if (++finished_ == tasks_) done_.notify_all();
    }
  }
}

std::size_t configured_threads() {
  if (const char* env = std::getenv("SNL_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

ThreadPool& default_pool() {
  static ThreadPool pool(configured_threads());
  return pool;
}

}  // namespace snl
