#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <future>
#include <random>
#include <thread>
#include <vector>

#include "wasym/engine/coroutine.hpp"
#include "wasym/engine/scheduler.hpp"
#include "wasym/engine/work_queue.hpp"

using namespace wasym::engine;
using namespace std::chrono_literals;

namespace {

struct Wls {
  unsigned id = 0;
};

using Co = Coroutine<int, Wls>;
using St = Status<int, Wls>;

// Finite coroutine tree description, independent of the engine types.
struct Tree {
  enum Kind { Leaf, Stop, Yield, Choice } kind = Leaf;
  int value = 0;
  std::vector<Tree> kids;
};

Tree random_tree(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> d(0, 9);
  const int r = depth == 0 ? d(rng) % 2 : d(rng);
  Tree t;
  if (r == 0) {
    t.kind = Tree::Stop;
  } else if (r <= 3) {
    t.kind = Tree::Leaf;
    t.value = d(rng) * 10 + d(rng);
  } else if (r <= 5) {
    t.kind = Tree::Yield;
    t.kids.push_back(random_tree(rng, depth - 1));
  } else {
    t.kind = Tree::Choice;
    t.kids.push_back(random_tree(rng, depth - 1));
    t.kids.push_back(random_tree(rng, depth - 1));
  }
  return t;
}

Co build(const Tree& t) {
  switch (t.kind) {
    case Tree::Leaf: return ret<int, Wls>(t.value);
    case Tree::Stop: return stop<int, Wls>();
    case Tree::Yield: {
      Co next = build(t.kids[0]);
      return bind<Unit, int, Wls>(yield<Wls>(), [next](Unit) { return next; });
    }
    case Tree::Choice: return choose(build(t.kids[0]), build(t.kids[1]));
  }
  return stop<int, Wls>();
}

// Values a tree can produce, computed without the engine.
void tree_outcomes(const Tree& t, std::vector<int>& out) {
  switch (t.kind) {
    case Tree::Leaf: out.push_back(t.value); break;
    case Tree::Stop: break;
    case Tree::Yield: tree_outcomes(t.kids[0], out); break;
    case Tree::Choice:
      tree_outcomes(t.kids[0], out);
      tree_outcomes(t.kids[1], out);
      break;
  }
}

// Sequential reference runner: depth-first, no queue, no threads.
void reference_step(St s, Wls& w, std::vector<int>& out) {
  auto& n = s.node();
  if (auto* now = std::get_if<St::Now>(&n)) {
    out.push_back(now->value);
  } else if (auto* y = std::get_if<St::Yield>(&n)) {
    reference_step(y->next.run(w), w, out);
  } else if (auto* c = std::get_if<St::Choice>(&n)) {
    reference_step(std::move(*c->left), w, out);
    reference_step(std::move(*c->right), w, out);
  }
}

std::vector<int> reference(const Co& c) {
  Wls w;
  std::vector<int> out;
  reference_step(c.run(w), w, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> scheduled(const Co& c, unsigned workers) {
  std::mutex mu;
  std::vector<int> out;
  run_scheduler<int, Wls>({c}, workers, [](unsigned id) { return Wls{id}; }, [&](int&& v) {
    std::lock_guard lock(mu);
    out.push_back(v);
  });
  std::sort(out.begin(), out.end());
  return out;
}

// A family of continuation functions: each maps a value to a small tree seeded by it.
struct Kleisli {
  int salt;
  Co operator()(int x) const {
    std::mt19937 rng(static_cast<std::uint32_t>(x * 7919 + salt));
    Tree t = random_tree(rng, 2);
    // make the result depend on x so mistakes in plumbing show up
    std::function<void(Tree&)> shift = [&](Tree& n) {
      n.value += x * 1000;
      for (auto& k : n.kids) shift(k);
    };
    shift(t);
    return build(t);
  }
};

template <class F>
auto with_watchdog(F&& f) {
  auto fut = std::async(std::launch::async, std::forward<F>(f));
  if (fut.wait_for(60s) != std::future_status::ready) {
    ADD_FAILURE() << "watchdog: run did not terminate within 60 s";
    std::abort();
  }
  return fut.get();
}

}  // namespace

TEST(Coroutine, ReferenceRunnerMatchesTreeSemantics) {
  std::mt19937 rng(1);
  for (int i = 0; i < 200; ++i) {
    Tree t = random_tree(rng, 6);
    std::vector<int> want;
    tree_outcomes(t, want);
    std::sort(want.begin(), want.end());
    EXPECT_EQ(reference(build(t)), want);
  }
}

TEST(Coroutine, MonadLaws) {
  std::mt19937 rng(42);
  for (int i = 0; i < 1000; ++i) {
    const Tree t = random_tree(rng, 5);
    const Co m = build(t);
    const Kleisli f{i}, g{i + 5000};
    const int a = static_cast<int>(rng() % 100);

    // left identity
    EXPECT_EQ(reference(bind<int, int, Wls>(ret<int, Wls>(a), f)), reference(f(a)));
    // right identity
    EXPECT_EQ(reference(bind<int, int, Wls>(m, [](int x) { return ret<int, Wls>(x); })), reference(m));
    // associativity
    auto lhs = bind<int, int, Wls>(bind<int, int, Wls>(m, f), g);
    auto rhs = bind<int, int, Wls>(m, [f, g](int x) { return bind<int, int, Wls>(f(x), g); });
    EXPECT_EQ(reference(lhs), reference(rhs));
    if (i % 50 == 0) {
      EXPECT_EQ(scheduled(lhs, 3), reference(rhs));
    }
  }
}

TEST(Coroutine, ForkRunsBothSidesThroughTheQueue) {
  auto c = bind<bool, int, Wls>(fork<Wls>(), [](bool child) { return ret<int, Wls>(child ? 1 : 0); });
  Wls w;
  auto s = c.run(w);
  ASSERT_TRUE(s.is_choice());
  auto& ch = std::get<St::Choice>(s.node());
  EXPECT_TRUE(ch.left->is_yield());
  EXPECT_TRUE(ch.right->is_yield());
  EXPECT_EQ(reference(c), (std::vector<int>{0, 1}));
}

TEST(Coroutine, GetWlsSeesTheRunningWorker) {
  auto c = bind<Wls*, int, Wls>(get_wls<Wls>(), [](Wls* w) { return ret<int, Wls>(static_cast<int>(w->id)); });
  Wls w{7};
  auto s = c.run(w);
  EXPECT_EQ(std::get<St::Now>(s.node()).value, 7);
}

TEST(Coroutine, CoroutinesAreRerunnable) {
  int calls = 0;
  Co c([&calls](Wls&) {
    ++calls;
    return St::now(calls);
  });
  Wls w;
  c.run(w);
  c.run(w);
  EXPECT_EQ(calls, 2);
}

TEST(WorkQueue, EmptyWithoutPledgesIsExhausted) {
  WorkQueue<int> q;
  EXPECT_FALSE(q.pop(false));
}

TEST(WorkQueue, Fifo) {
  WorkQueue<int> q;
  for (int i = 0; i < 5; ++i) q.push(i);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(q.pop(false), i);
}

TEST(WorkQueue, PopTakesPledgeAtomically) {
  WorkQueue<int> q;
  q.push(1);
  EXPECT_EQ(q.pop(true), 1);
  EXPECT_EQ(q.pledges(), 1u);
  q.end_pledge();
  EXPECT_EQ(q.pledges(), 0u);
}

TEST(WorkQueue, PledgeBlocksUntilPush) {
  WorkQueue<int> q;
  q.make_pledge();
  auto fut = std::async(std::launch::async, [&] { return q.pop(false); });
  EXPECT_EQ(fut.wait_for(50ms), std::future_status::timeout);
  q.push(9);
  EXPECT_EQ(fut.get(), 9);
}

TEST(WorkQueue, LastPledgeReleaseWakesWaiters) {
  WorkQueue<int> q;
  q.make_pledge();
  q.make_pledge();
  auto a = std::async(std::launch::async, [&] { return q.pop(false); });
  auto b = std::async(std::launch::async, [&] { return q.pop(false); });
  q.end_pledge();
  EXPECT_EQ(a.wait_for(50ms), std::future_status::timeout);
  q.end_pledge();
  EXPECT_FALSE(a.get());
  EXPECT_FALSE(b.get());
}

TEST(WorkQueue, CloseWakesAndDropsWork) {
  WorkQueue<int> q;
  q.make_pledge();
  auto fut = std::async(std::launch::async, [&] { return q.pop(false); });
  std::this_thread::sleep_for(20ms);
  q.close();
  EXPECT_FALSE(fut.get());
  q.push(3);
  EXPECT_EQ(q.size(), 0u);
  EXPECT_TRUE(q.closed());
}

TEST(WorkQueue, UnbalancedEndPledgeThrows) {
  WorkQueue<int> q;
  EXPECT_THROW(q.end_pledge(), std::logic_error);
}

TEST(WorkQueue, WorkWhileDrainsPushedWork) {
  WorkQueue<int> q;
  q.push(10);
  std::atomic<int> handled{0};
  auto worker = [&] {
    q.work_while([&](int v, const auto& push) {
      ++handled;
      if (v > 0) {
        push(v - 1);
        push(v - 1);
      }
    });
  };
  with_watchdog([&] {
    std::vector<std::thread> ts;
    for (int i = 0; i < 4; ++i) ts.emplace_back(worker);
    for (auto& t : ts) t.join();
    return 0;
  });
  EXPECT_EQ(handled.load(), (1 << 11) - 1);
  EXPECT_EQ(q.pledges(), 0u);
}

TEST(Scheduler, BinaryTreeLeafCounts) {
  for (unsigned n : {1u, 2u, 4u, 8u}) {
    for (int k : {0, 1, 5, 10}) {
      std::function<Co(int, int)> tree = [&tree](int depth, int path) -> Co {
        if (depth == 0) return ret<int, Wls>(path);
        return bind<bool, int, Wls>(fork<Wls>(), [&tree, depth, path](bool child) {
          return tree(depth - 1, path * 2 + (child ? 1 : 0));
        });
      };
      auto got = with_watchdog([&] { return scheduled(tree(k, 0), n); });
      std::vector<int> want(1u << k);
      for (int i = 0; i < (1 << k); ++i) want[i] = i;
      EXPECT_EQ(got, want) << "N=" << n << " k=" << k;
    }
  }
}

TEST(Scheduler, MatchesReferenceOnRandomTrees) {
  std::mt19937 rng(9);
  for (int i = 0; i < 100; ++i) {
    const Co c = build(random_tree(rng, 7));
    const auto want = reference(c);
    for (unsigned n : {1u, 2u, 4u, 8u}) EXPECT_EQ(with_watchdog([&] { return scheduled(c, n); }), want);
  }
}

TEST(Scheduler, WorkerLocalStorageAndTurnOwnership) {
  constexpr unsigned kWorkers = 4;
  std::mutex mu;
  std::vector<int> ids;
  std::atomic<int> violations{0};
  // Every path carries an owner slot; a turn claims it and releases it before returning.
  std::function<Co(int, std::shared_ptr<std::atomic<int>>)> path = [&](int depth, auto owner) -> Co {
    return Co([&, depth, owner](Wls& w) {
      int free = -1;
      if (!owner->compare_exchange_strong(free, static_cast<int>(w.id))) ++violations;
      St s = depth == 0 ? St::now(static_cast<int>(w.id))
                        : St::choice(St::yield({}, path(depth - 1, std::make_shared<std::atomic<int>>(-1))),
                                     St::yield({}, path(depth - 1, owner)));
      owner->store(-1);
      return s;
    });
  };
  with_watchdog([&] {
    run_scheduler<int, Wls>({path(9, std::make_shared<std::atomic<int>>(-1))}, kWorkers,
                            [](unsigned id) { return Wls{id}; }, [&](int&& id) {
                              std::lock_guard lock(mu);
                              ids.push_back(id);
                            });
    return 0;
  });
  EXPECT_EQ(ids.size(), 512u);
  for (int id : ids) EXPECT_LT(id, static_cast<int>(kWorkers));
  EXPECT_EQ(violations.load(), 0);
}

TEST(Scheduler, NoLostWork) {
  counters().reset();
  std::mt19937 rng(3);
  const Tree t = random_tree(rng, 10);
  Scheduler<int, Wls> sched(4, [](unsigned id) { return Wls{id}; }, [](int&&) {});
  sched.submit(build(t));
  with_watchdog([&] {
    sched.run();
    return 0;
  });
  // every pushed continuation was popped and stepped, plus the root
  EXPECT_EQ(sched.queue().pushed(), 1 + counters().yields.load());
  EXPECT_EQ(sched.queue().size(), 0u);
}

TEST(Scheduler, CloseFromCallbackStopsEarly) {
  std::function<Co(int)> wide = [&wide](int depth) -> Co {
    if (depth == 0) return ret<int, Wls>(1);
    return choose(bind<Unit, int, Wls>(yield<Wls>(), [&wide, depth](Unit) { return wide(depth - 1); }),
                  bind<Unit, int, Wls>(yield<Wls>(), [&wide, depth](Unit) { return wide(depth - 1); }));
  };
  std::atomic<int> seen{0};
  Scheduler<int, Wls>* self = nullptr;
  Scheduler<int, Wls> sched(2, [](unsigned id) { return Wls{id}; }, [&](int&&) {
    if (++seen == 1) self->close();
  });
  self = &sched;
  sched.submit(wide(14));
  with_watchdog([&] {
    sched.run();
    return 0;
  });
  EXPECT_GE(seen.load(), 1);
  EXPECT_LT(seen.load(), 1 << 14);
}

TEST(Scheduler, WorkerExceptionBecomesInternalError) {
  Co boom([](Wls&) -> St { throw std::runtime_error("boom"); });
  Co fine = ret<int, Wls>(1);
  Scheduler<int, Wls> sched(3, [](unsigned id) { return Wls{id}; }, [](int&&) {});
  sched.submit(fine);
  sched.submit(boom);
  try {
    with_watchdog([&] {
      sched.run();
      return 0;
    });
    FAIL() << "expected InternalEngineError";
  } catch (const InternalEngineError& e) {
    EXPECT_STREQ(e.what(), "boom");
    EXPECT_TRUE(e.cause());
  }
}
