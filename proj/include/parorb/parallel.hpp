#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

namespace parorb {

// Fixed pool of workers executing statically partitioned index loops.
// Tasks must write only to their own output slots; any reduction happens
// afterwards in the caller, in index order. Numerical results therefore
// never depend on the worker count.
class Executor {
 public:
  explicit Executor(int threads);
  ~Executor();
  Executor(const Executor&) = delete;
  Executor& operator=(const Executor&) = delete;

  int threads() const { return static_cast<int>(workers_.size()) + 1; }

  // Runs fn(i) for i in [0, count), blocking until all indices finished.
  // The first exception thrown by any task is rethrown here.
  void for_each(std::int64_t count, const std::function<void(std::int64_t)>& fn);

  static Executor& serial();

 private:
  void worker_loop();
  void run_chunk(int slot);

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_start_;
  std::condition_variable cv_done_;
  std::uint64_t generation_ = 0;
  int pending_ = 0;
  int next_slot_ = 0;
  std::int64_t count_ = 0;
  std::int64_t chunk_ = 0;
  const std::function<void(std::int64_t)>* fn_ = nullptr;
  std::exception_ptr error_;
  bool stop_ = false;
};

// Wall-clock accounting split into orbital-parallel work and
// synchronization phases (the two-part time breakdown of run summaries).
class PhaseTimer {
 public:
  template <class F>
  decltype(auto) par(F&& f) {
    return timed(par_, std::forward<F>(f));
  }

  template <class F>
  decltype(auto) sync(F&& f) {
    return timed(sync_, std::forward<F>(f));
  }

  double par_seconds() const { return par_; }
  double sync_seconds() const { return sync_; }

 private:
  template <class F>
  decltype(auto) timed(double& bucket, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<std::invoke_result_t<F>>) {
      std::forward<F>(f)();
      bucket += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    } else {
      auto result = std::forward<F>(f)();
      bucket += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return result;
    }
  }

  double par_ = 0.0;
  double sync_ = 0.0;
};

}  // namespace parorb
