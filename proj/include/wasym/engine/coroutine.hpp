#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <variant>

namespace wasym::engine {

/// Scheduling hint carried by Yield. Only the default value exists for now and the queue ignores it.
struct Priority {
  int value = 0;
  auto operator<=>(const Priority&) const = default;
};

struct Unit {
  bool operator==(const Unit&) const = default;
};

/// Global instrumentation, read by statistics output and by tests that check
/// concrete execution never touches the engine.
struct Counters {
  std::atomic<std::uint64_t> statuses{0};
  std::atomic<std::uint64_t> steps{0};
  std::atomic<std::uint64_t> yields{0};
  std::atomic<std::uint64_t> forks{0};
  std::atomic<std::uint64_t> finals{0};
  std::atomic<std::uint64_t> stops{0};
  std::atomic<std::uint64_t> scheduler_runs{0};

  void reset() {
    for (auto* c : {&statuses, &steps, &yields, &forks, &finals, &stops, &scheduler_runs}) c->store(0);
  }
};

inline Counters& counters() {
  static Counters c;
  return c;
}

template <class A, class W>
class Coroutine;

/// One step of a coroutine: a final value, a rescheduled continuation, a binary
/// choice between two steps, or a pruned branch.
template <class A, class W>
class Status {
 public:
  struct Now {
    A value;
  };
  struct Yield {
    Priority priority;
    Coroutine<A, W> next;
  };
  struct Choice {
    std::unique_ptr<Status> left;
    std::unique_ptr<Status> right;
  };
  struct Stop {};

  static Status now(A value) { return Status(Now{std::move(value)}); }
  static Status yield(Priority p, Coroutine<A, W> next) { return Status(Yield{p, std::move(next)}); }
  static Status choice(Status l, Status r) {
    return Status(Choice{std::make_unique<Status>(std::move(l)), std::make_unique<Status>(std::move(r))});
  }
  static Status stop() { return Status(Stop{}); }

  std::variant<Now, Yield, Choice, Stop>& node() { return node_; }
  const std::variant<Now, Yield, Choice, Stop>& node() const { return node_; }

  bool is_now() const { return std::holds_alternative<Now>(node_); }
  bool is_yield() const { return std::holds_alternative<Yield>(node_); }
  bool is_choice() const { return std::holds_alternative<Choice>(node_); }
  bool is_stop() const { return std::holds_alternative<Stop>(node_); }

 private:
  template <class N>
  explicit Status(N n) : node_(std::move(n)) {
    counters().statuses.fetch_add(1, std::memory_order_relaxed);
  }

  std::variant<Now, Yield, Choice, Stop> node_;
};

/// A deferred step from worker-local storage to a Status. Running it does not consume it.
template <class A, class W>
class Coroutine {
 public:
  using Fn = std::function<Status<A, W>(W&)>;

  Coroutine() = default;
  explicit Coroutine(Fn fn) : fn_(std::move(fn)) {}

  Status<A, W> run(W& wls) const { return fn_(wls); }

 private:
  Fn fn_;
};

template <class A, class W>
Coroutine<A, W> ret(A value) {
  return Coroutine<A, W>([value = std::move(value)](W&) { return Status<A, W>::now(value); });
}

template <class W>
Coroutine<Unit, W> yield(Priority p = {}) {
  return Coroutine<Unit, W>([p](W&) { return Status<Unit, W>::yield(p, ret<Unit, W>(Unit{})); });
}

template <class A, class W>
Coroutine<A, W> choose(Coroutine<A, W> a, Coroutine<A, W> b) {
  return Coroutine<A, W>([a = std::move(a), b = std::move(b)](W& w) {
    auto l = a.run(w);
    auto r = b.run(w);
    return Status<A, W>::choice(std::move(l), std::move(r));
  });
}

template <class A, class W>
Coroutine<A, W> stop() {
  return Coroutine<A, W>([](W&) { return Status<A, W>::stop(); });
}

/// Both continuations go through the queue: false in the parent, true in the child.
template <class W>
Coroutine<bool, W> fork(Priority parent = {}, Priority child = {}) {
  return Coroutine<bool, W>([parent, child](W&) {
    return Status<bool, W>::choice(Status<bool, W>::yield(parent, ret<bool, W>(false)),
                                   Status<bool, W>::yield(child, ret<bool, W>(true)));
  });
}

template <class W>
Coroutine<W*, W> get_wls() {
  return Coroutine<W*, W>([](W& w) { return Status<W*, W>::now(&w); });
}

template <class A, class B, class W, class F>
Status<B, W> unfold(Status<A, W> s, const F& f, W& w);

/// Sequencing. A step of the result unfolds the whole status tree of `m`'s step.
template <class A, class B, class W, class F>
Coroutine<B, W> bind(Coroutine<A, W> m, F f) {
  return Coroutine<B, W>([m = std::move(m), f = std::move(f)](W& w) { return unfold<A, B, W>(m.run(w), f, w); });
}

template <class A, class B, class W, class F>
Status<B, W> unfold(Status<A, W> s, const F& f, W& w) {
  using SA = Status<A, W>;
  using SB = Status<B, W>;
  auto& n = s.node();
  if (auto* now = std::get_if<typename SA::Now>(&n)) {
    Coroutine<B, W> next = f(std::move(now->value));
    return next.run(w);
  }
  if (auto* y = std::get_if<typename SA::Yield>(&n)) return SB::yield(y->priority, bind<A, B, W>(std::move(y->next), f));
  if (auto* c = std::get_if<typename SA::Choice>(&n)) {
    auto l = unfold<A, B, W>(std::move(*c->left), f, w);
    auto r = unfold<A, B, W>(std::move(*c->right), f, w);
    return SB::choice(std::move(l), std::move(r));
  }
  return SB::stop();
}

}  // namespace wasym::engine
