#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "wasym/engine/scheduler.hpp"
#include "wasym/interp/concrete_choice.hpp"
#include "wasym/interp/interpreter.hpp"
#include "wasym/interp/symbolic_choice.hpp"
#include "wasym/solver/solver.hpp"
#include "wasym/wat/link.hpp"

namespace wasym::interp {

inline constexpr std::uint64_t kDefaultFuel = 1'000'000;
inline constexpr std::uint64_t kDefaultYieldInterval = 10'000;

struct RunConfig {
  unsigned workers = 1;
  std::uint64_t fuel = kDefaultFuel;
  double timeout_s = 0;  // whole run; 0 = none
  solver::SolverConfig solver;
  bool fail_fast = false;
  bool deterministic = false;
  std::uint64_t yield_interval = kDefaultYieldInterval;
  std::function<void(const std::string&)> warn;
};

struct ConcreteResult {
  Outcome<values::ConcreteValue> outcome;
  std::uint64_t instructions = 0;
};

/// One concrete execution of `main`. With `replay`, symbol intrinsics read the model.
inline ConcreteResult run_concrete(const wat::Instance& inst, std::uint64_t fuel = kDefaultFuel,
                                   const solver::Model* replay = nullptr) {
  ConcreteChoice choice(replay);
  Interpreter<ConcreteValues, ConcreteChoice> interp(inst, choice);
  auto state = interp.initial_state(wat::entry_point(inst), fuel);
  auto step = interp.run(state);
  return ConcreteResult{std::move(*step.outcome), state.instructions};
}

struct SymbolicStats {
  std::uint64_t paths = 0;
  std::uint64_t ok = 0;
  std::uint64_t findings = 0;
  std::uint64_t incomplete = 0;
  std::uint64_t pruned = 0;
  std::uint64_t solver_queries = 0;
  std::uint64_t concretizations = 0;
  std::uint64_t steps = 0;
  std::uint64_t forks = 0;
  std::uint64_t yields = 0;
  unsigned workers = 1;
  std::string backend;
  double seconds = 0;
  bool timed_out = false;
  bool stopped_early = false;
};

/// Explores every path of `main`. `on_leaf` runs on the worker that finished the path,
/// possibly concurrently with other calls; returning true cancels the remaining work.
inline SymbolicStats run_symbolic(const wat::Instance& inst, const RunConfig& cfg,
                                  const std::function<bool(Leaf&&)>& on_leaf) {
  const auto began = std::chrono::steady_clock::now();
  const solver::SolverConfig scfg = solver::resolve(cfg.solver, cfg.warn);
  const unsigned workers = cfg.deterministic ? 1 : std::max(1u, cfg.workers);

  SymbolicChoice choice(cfg.deterministic ? 0 : cfg.yield_interval);
  SymbolicChoice::Interp interp(inst, choice);
  choice.attach(interp);

  auto& ctr = engine::counters();
  const std::uint64_t steps0 = ctr.steps, forks0 = ctr.forks, yields0 = ctr.yields, stops0 = ctr.stops;
  const std::uint64_t queries0 = solver::total_queries(), conc0 = concretizations();

  SymbolicStats stats;
  stats.workers = workers;
  stats.backend = scfg.backend == solver::Backend::External ? scfg.command : "brute-force";
  std::mutex mu;
  bool stop_requested = false;

  engine::Scheduler<Leaf, Worker> sched(
      workers,
      [&scfg](unsigned id) { return Worker{solver::make_session(scfg), id}; },
      [&](Leaf&& leaf) {
        {
          std::lock_guard lock(mu);
          ++stats.paths;
          switch (leaf.kind) {
            case LeafKind::Ok: ++stats.ok; break;
            case LeafKind::Incomplete: ++stats.incomplete; break;
            default: ++stats.findings; break;
          }
        }
        if (on_leaf(std::move(leaf))) {
          {
            std::lock_guard lock(mu);
            stop_requested = true;
          }
          sched.close();
        }
      });
  sched.submit(choice.start(interp.initial_state(wat::entry_point(inst), cfg.fuel)));

  std::mutex wd_mu;
  std::condition_variable wd_cv;
  bool finished = false;
  bool timed_out = false;
  std::thread watchdog;
  if (cfg.timeout_s > 0) {
    watchdog = std::thread([&] {
      std::unique_lock lock(wd_mu);
      if (!wd_cv.wait_for(lock, std::chrono::duration<double>(cfg.timeout_s), [&] { return finished; })) {
        timed_out = true;
        sched.close();
      }
    });
  }
  auto stop_watchdog = [&] {
    {
      std::lock_guard lock(wd_mu);
      finished = true;
    }
    wd_cv.notify_all();
    if (watchdog.joinable()) watchdog.join();
  };
  try {
    sched.run();
  } catch (...) {
    stop_watchdog();
    throw;
  }
  stop_watchdog();

  stats.timed_out = timed_out;
  stats.stopped_early = stop_requested;
  stats.steps = ctr.steps - steps0;
  stats.forks = ctr.forks - forks0;
  stats.yields = ctr.yields - yields0;
  stats.pruned = ctr.stops - stops0;
  stats.solver_queries = solver::total_queries() - queries0;
  stats.concretizations = concretizations() - conc0;
  stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - began).count();
  return stats;
}

/// Collects every leaf; convenient for tests and small programs.
inline std::vector<Leaf> explore(const wat::Instance& inst, const RunConfig& cfg, SymbolicStats* stats = nullptr) {
  std::mutex mu;
  std::vector<Leaf> leaves;
  auto s = run_symbolic(inst, cfg, [&](Leaf&& l) {
    std::lock_guard lock(mu);
    leaves.push_back(std::move(l));
    return false;
  });
  if (stats) *stats = s;
  return leaves;
}

}  // namespace wasym::interp
