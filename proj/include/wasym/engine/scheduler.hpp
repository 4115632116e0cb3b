#pragma once

#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "wasym/engine/coroutine.hpp"
#include "wasym/engine/work_queue.hpp"

namespace wasym::engine {

/// A worker failed with an unexpected exception; the run was cancelled.
class InternalEngineError : public std::runtime_error {
 public:
  InternalEngineError(const std::string& what, std::exception_ptr cause)
      : std::runtime_error(what), cause_(std::move(cause)) {}

  const std::exception_ptr& cause() const { return cause_; }

 private:
  std::exception_ptr cause_;
};

/// Runs coroutines on worker threads that share one queue. Each worker owns a
/// worker-local storage value built by `init(worker_index)`.
template <class A, class W>
class Scheduler {
 public:
  using Task = Coroutine<A, W>;
  using InitFn = std::function<W(unsigned)>;
  using FinalFn = std::function<void(A&&)>;

  Scheduler(unsigned workers, InitFn init, FinalFn on_final)
      : workers_(workers == 0 ? 1 : workers), init_(std::move(init)), on_final_(std::move(on_final)) {}

  void submit(Task t) { queue_.push(std::move(t)); }

  /// Cancels the run: pending work is dropped and idle workers return.
  void close() { queue_.close(); }

  WorkQueue<Task>& queue() { return queue_; }

  void run() {
    counters().scheduler_runs.fetch_add(1, std::memory_order_relaxed);
    std::vector<std::thread> threads;
    threads.reserve(workers_);
    for (unsigned i = 0; i < workers_; ++i) threads.emplace_back([this, i] { worker(i); });
    for (auto& t : threads) t.join();
    if (failure_) {
      std::string what = "worker failed";
      try {
        std::rethrow_exception(failure_);
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      throw InternalEngineError(what, failure_);
    }
  }

 private:
  void worker(unsigned index) {
    try {
      W wls = init_(index);
      queue_.work_while([&](Task task, const auto& push) { handle(task.run(wls), push); });
    } catch (...) {
      {
        std::lock_guard lock(failure_mu_);
        if (!failure_) failure_ = std::current_exception();
      }
      queue_.close();
    }
  }

  template <class Push>
  void handle(Status<A, W> s, const Push& push) {
    counters().steps.fetch_add(1, std::memory_order_relaxed);
    auto& n = s.node();
    using S = Status<A, W>;
    if (auto* now = std::get_if<typename S::Now>(&n)) {
      counters().finals.fetch_add(1, std::memory_order_relaxed);
      on_final_(std::move(now->value));
    } else if (auto* y = std::get_if<typename S::Yield>(&n)) {
      counters().yields.fetch_add(1, std::memory_order_relaxed);
      push(std::move(y->next));
    } else if (auto* c = std::get_if<typename S::Choice>(&n)) {
      counters().forks.fetch_add(1, std::memory_order_relaxed);
      handle(std::move(*c->left), push);
      handle(std::move(*c->right), push);
    } else {
      counters().stops.fetch_add(1, std::memory_order_relaxed);
    }
  }

  unsigned workers_;
  InitFn init_;
  FinalFn on_final_;
  WorkQueue<Task> queue_;
  std::mutex failure_mu_;
  std::exception_ptr failure_;
};

template <class A, class W>
void run_scheduler(std::vector<Coroutine<A, W>> roots, unsigned workers, std::function<W(unsigned)> init,
                   std::function<void(A&&)> on_final) {
  Scheduler<A, W> sched(workers, std::move(init), std::move(on_final));
  for (auto& r : roots) sched.submit(std::move(r));
  sched.run();
}

}  // namespace wasym::engine
