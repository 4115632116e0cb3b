#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <utility>

namespace wasym::engine {

/// Synchronized FIFO with pledges. A pledge promises that more elements may
/// still be pushed, so pop blocks instead of reporting exhaustion while one is held.
template <class T>
class WorkQueue {
 public:
  void push(T value) {
    {
      std::lock_guard lock(mu_);
      if (closed_) return;
      items_.push_back(std::move(value));
      ++pushed_;
    }
    cv_.notify_one();
  }

  /// Blocks until an element is available, or returns nothing once the queue
  /// is empty with no pledges held, or closed. With `start_pledge` a pledge is
  /// taken atomically together with the element.
  std::optional<T> pop(bool start_pledge) {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return closed_ || !items_.empty() || pledges_ == 0; });
    if (closed_ || items_.empty()) {
      lock.unlock();
      cv_.notify_all();
      return std::nullopt;
    }
    T v = std::move(items_.front());
    items_.pop_front();
    if (start_pledge) ++pledges_;
    return v;
  }

  void make_pledge() {
    std::lock_guard lock(mu_);
    ++pledges_;
  }

  void end_pledge() {
    bool wake = false;
    {
      std::lock_guard lock(mu_);
      if (pledges_ == 0) throw std::logic_error("end_pledge without a pledge");
      wake = --pledges_ == 0;
    }
    if (wake) cv_.notify_all();
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
      items_.clear();
    }
    cv_.notify_all();
  }

  /// Pops until exhaustion, calling `body(element, push)`. A pledge is held for
  /// the duration of each body call.
  template <class Body>
  void work_while(Body&& body) {
    while (auto v = pop(true)) {
      struct Release {
        WorkQueue* q;
        ~Release() { q->end_pledge(); }
      } release{this};
      body(std::move(*v), [this](T x) { push(std::move(x)); });
    }
  }

  bool closed() const {
    std::lock_guard lock(mu_);
    return closed_;
  }

  std::uint64_t pledges() const {
    std::lock_guard lock(mu_);
    return pledges_;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }

  std::uint64_t pushed() const {
    std::lock_guard lock(mu_);
    return pushed_;
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> items_;
  std::uint64_t pledges_ = 0;
  std::uint64_t pushed_ = 0;
  bool closed_ = false;
};

}  // namespace wasym::engine
