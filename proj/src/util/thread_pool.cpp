#include "satpose/util/thread_pool.hpp"

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <thread>
#include <vector>

namespace satpose {
namespace {

std::atomic<int> g_workers{0};
thread_local bool t_inside_pool = false;

class Pool {
 public:
  static Pool& instance() {
    static Pool pool;
    return pool;
  }

  void run(std::size_t n, const std::function<void(std::size_t)>& fn, int workers) {
    ensure_threads(workers - 1);
    std::unique_lock lock(mutex_);
    job_ = &fn;
    job_size_ = n;
    next_index_.store(0, std::memory_order_relaxed);
    pending_ = static_cast<int>(threads_.size());
    ++generation_;
    cv_.notify_all();
    lock.unlock();

    work();  // caller participates

    lock.lock();
    done_cv_.wait(lock, [&] { return pending_ == 0; });
    job_ = nullptr;
  }

 private:
  Pool() = default;
  ~Pool() {
    {
      std::lock_guard lock(mutex_);
      stop_ = true;
      ++generation_;
      cv_.notify_all();
    }
    for (auto& t : threads_) t.join();
  }

  void ensure_threads(int count) {
    if (count <= static_cast<int>(threads_.size())) return;
    std::lock_guard lock(mutex_);
    while (static_cast<int>(threads_.size()) < count) {
      threads_.emplace_back([this] { worker_loop(); });
    }
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    while (true) {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      lock.unlock();
      work();
      lock.lock();
      if (--pending_ == 0) done_cv_.notify_all();
    }
  }

  void work() {
    const auto* job = job_;
    if (!job) return;
    t_inside_pool = true;
    while (true) {
      const std::size_t i = next_index_.fetch_add(1, std::memory_order_relaxed);
      if (i >= job_size_) break;
      (*job)(i);
    }
    t_inside_pool = false;
  }

  std::mutex mutex_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  std::vector<std::thread> threads_;
  const std::function<void(std::size_t)>* job_ = nullptr;
  std::size_t job_size_ = 0;
  std::atomic<std::size_t> next_index_{0};
  std::uint64_t generation_ = 0;
  int pending_ = 0;
  bool stop_ = false;
};

}  // namespace

void set_worker_threads(int n) { g_workers.store(n); }

int worker_threads() {
  int n = g_workers.load();
  if (n <= 0) {
    n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
  }
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const int workers = worker_threads();
  if (workers <= 1 || n == 1 || t_inside_pool) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  Pool::instance().run(n, fn, workers);
}

}  // namespace satpose
