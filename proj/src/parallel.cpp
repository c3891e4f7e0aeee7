#include "parorb/parallel.hpp"

#include <algorithm>

#include "parorb/errors.hpp"

namespace parorb {

Executor::Executor(int threads) {
  if (threads < 1) throw InvalidArgument("Executor: thread count must be >= 1");
  workers_.reserve(threads - 1);
  for (int i = 0; i < threads - 1; ++i) {
    workers_.emplace_back([this] { worker_loop(); });
  }
}

Executor::~Executor() {
  {
    std::lock_guard lk(mu_);
    stop_ = true;
  }
  cv_start_.notify_all();
  for (auto& t : workers_) t.join();
}

Executor& Executor::serial() {
  static Executor instance(1);
  return instance;
}

void Executor::for_each(std::int64_t count, const std::function<void(std::int64_t)>& fn) {
  if (count <= 0) return;
  if (workers_.empty()) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  {
    std::lock_guard lk(mu_);
    ++generation_;
    count_ = count;
    chunk_ = (count + threads() - 1) / threads();
    fn_ = &fn;
    pending_ = static_cast<int>(workers_.size());
    next_slot_ = 1;
    error_ = nullptr;
  }
  cv_start_.notify_all();
  run_chunk(0);
  std::unique_lock lk(mu_);
  cv_done_.wait(lk, [this] { return pending_ == 0; });
  fn_ = nullptr;
  if (error_) std::rethrow_exception(error_);
}

void Executor::worker_loop() {
  std::uint64_t seen = 0;
  for (;;) {
    int slot = 0;
    {
      std::unique_lock lk(mu_);
      cv_start_.wait(lk, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      slot = next_slot_++;
    }
    run_chunk(slot);
    {
      std::lock_guard lk(mu_);
      if (--pending_ == 0) cv_done_.notify_all();
    }
  }
}

void Executor::run_chunk(int slot) {
  const std::int64_t lo = slot * chunk_;
  const std::int64_t hi = std::min(count_, lo + chunk_);
  try {
    for (std::int64_t i = lo; i < hi; ++i) (*fn_)(i);
  } catch (...) {
    std::lock_guard lk(mu_);
    if (!error_) error_ = std::current_exception();
  }
}

}  // namespace parorb
