#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wasym/engine/coroutine.hpp"
#include "wasym/interp/interpreter.hpp"
#include "wasym/interp/outcome.hpp"
#include "wasym/interp/state.hpp"
#include "wasym/interp/values.hpp"
#include "wasym/solver/solver.hpp"

namespace wasym::interp {

enum class LeafKind : std::uint8_t { Ok, Trap, AssertFailure, Incomplete };

/// What one explored path produced.
struct Leaf {
  LeafKind kind = LeafKind::Ok;
  TrapKind trap = TrapKind::Unreachable;
  /// Trap message, or the rendered failed condition.
  std::string message;
  solver::Model model;
  std::vector<sym::ExprPtr> path;
  std::vector<sym::ExprPtr> values;
  std::string reason;  // Incomplete
  Location where;

  bool is_finding() const { return kind == LeafKind::Trap || kind == LeafKind::AssertFailure; }
};

/// Worker-local storage: the worker's own solver session.
struct Worker {
  std::unique_ptr<solver::Session> solver;
  unsigned id = 0;
};

using Task = engine::Coroutine<Leaf, Worker>;
using TaskStatus = engine::Status<Leaf, Worker>;

inline std::atomic<std::uint64_t>& concretizations() {
  static std::atomic<std::uint64_t> n{0};
  return n;
}

/// The exploring effect. A select on a non-constant condition suspends the path as a
/// choice between two continuations; each one yields to the scheduler, asks its
/// worker's solver whether its side is feasible, records the guard and resumes.
class SymbolicChoice {
 public:
  using V = sym::ExprPtr;
  using State = ThreadState<SymbolicValues>;
  using Interp = Interpreter<SymbolicValues, SymbolicChoice>;

  struct Step {
    enum class Kind : std::uint8_t { Proceed, Finished, Suspended } kind = Kind::Proceed;
    std::optional<Outcome<V>> outcome;
    std::optional<TaskStatus> status;
  };

  /// `yield_interval` instructions between forced yields; 0 disables them.
  explicit SymbolicChoice(std::uint64_t yield_interval = 10'000) : yield_interval_(yield_interval) {}

  void attach(Interp& interp) { interp_ = &interp; }

  /// Root coroutine exploring every path from `s`.
  Task start(State s) {
    auto snap = std::make_shared<const State>(std::move(s));
    return Task([this, snap](Worker& w) {
      State st = *snap;
      return resume(st, w);
    });
  }

  Step proceed() const { return {}; }
  bool is_proceed(const Step& s) const { return s.kind == Step::Kind::Proceed; }
  Step finish(State&, Outcome<V> o) const {
    Step s;
    s.kind = Step::Kind::Finished;
    s.outcome = std::move(o);
    return s;
  }

  std::optional<Step> tick(State& s) {
    if (yield_interval_ == 0 || s.since_yield < yield_interval_) return std::nullopt;
    s.since_yield = 0;
    auto snap = std::make_shared<const State>(std::move(s));
    return suspend(TaskStatus::yield({}, Task([this, snap](Worker& w) {
                                       State st = *snap;
                                       return resume(st, w);
                                     })));
  }

  template <class K>
  Step select(State& s, const V& c, K k) {
    if (auto v = sym::const_value(c)) return k(s, *v != 0);
    auto snap = std::make_shared<const State>(std::move(s));
    auto branch = [this, snap, k](V guard, bool taken) {
      return engine::bind<engine::Unit, Leaf, Worker>(
          engine::yield<Worker>(), [this, snap, k, guard, taken](engine::Unit) {
            return Task([this, snap, k, guard, taken](Worker& w) {
              Current bind_worker(w);
              State st = *snap;
              if (!check_and_record(st, guard, w)) return TaskStatus::stop();
              return settle(st, k(st, taken), w);
            });
          });
    };
    Task both = engine::choose(branch(c, true), branch(sym::lnot(c), false));
    return suspend(both.run(current()));
  }

  template <class K>
  Step assume(State& s, const V& c, K k) {
    if (auto v = sym::const_value(c)) {
      if (*v != 0) return k(s);
      return suspend(TaskStatus::stop());
    }
    if (!check_and_record(s, c, current())) return suspend(TaskStatus::stop());
    return k(s);
  }

  template <class K>
  Step fresh(State& s, wat::ValueType t, K k) {
    const auto id = static_cast<std::uint32_t>(s.symbols.size());
    s.symbols.push_back(t);
    return k(s, sym::symbol(id, wat::bit_width(t)));
  }

  /// Picks one feasible value for `v` and records the equality.
  template <class K>
  Step concretize(State& s, const V& v, K k) {
    if (auto c = sym::const_value(v)) return k(s, *c);
    concretizations().fetch_add(1, std::memory_order_relaxed);
    if (!s.model_is_current()) {
      auto r = current().solver->check(s.pc);
      if (solver::is_unsat(r)) return suspend(TaskStatus::stop());
      if (auto* u = std::get_if<solver::Unknown>(&r)) {
        s.incomplete = true;
        return finish(s, Outcome<V>::abandoned(u->reason));
      }
      s.model = std::make_shared<const solver::Model>(std::move(std::get<solver::Sat>(r).model));
      s.model_pc = s.pc.head_ptr();
    }
    const solver::Model& m = *s.model;
    const std::uint64_t a = sym::evaluate(v, [&](std::uint32_t id) {
      auto it = m.find(id);
      return it == m.end() ? 0 : it->second.bits;
    });
    s.pc = s.pc.with(sym::relop(wat::RelOp::Eq, v, sym::constant(v->width, a)));
    s.model_pc = s.pc.head_ptr();
    return k(s, a);
  }

  /// Runs the interpreter on `st` until the path ends or suspends.
  TaskStatus resume(State& st, Worker& w) {
    Current bind_worker(w);
    return settle(st, interp_->run(st), w);
  }

 private:
  // Worker whose turn is running on this thread.
  struct Current {
    Worker* saved;
    explicit Current(Worker& w) : saved(slot()) { slot() = &w; }
    ~Current() { slot() = saved; }
    static Worker*& slot() {
      thread_local Worker* w = nullptr;
      return w;
    }
  };

  static Worker& current() {
    Worker* w = Current::slot();
    if (!w) throw InternalError("symbolic step outside a worker turn");
    return *w;
  }

  static Step suspend(TaskStatus s) {
    Step step;
    step.kind = Step::Kind::Suspended;
    step.status.emplace(std::move(s));
    return step;
  }

  TaskStatus settle(State& st, Step r, Worker& w) {
    switch (r.kind) {
      case Step::Kind::Proceed: return resume(st, w);
      case Step::Kind::Suspended: return std::move(*r.status);
      case Step::Kind::Finished: break;
    }
    return leaf(st, std::move(*r.outcome), w);
  }

  static bool check_and_record(State& st, const V& guard, Worker& w) {
    auto candidate = st.pc.with(guard);
    auto r = w.solver->check(candidate);
    if (solver::is_unsat(r)) return false;
    st.pc = std::move(candidate);
    if (auto* sat = std::get_if<solver::Sat>(&r)) {
      st.model = std::make_shared<const solver::Model>(std::move(sat->model));
      st.model_pc = st.pc.head_ptr();
    } else {
      st.incomplete = true;
      st.incomplete_reason = std::get<solver::Unknown>(r).reason;
      st.model.reset();
      st.model_pc.reset();
    }
    return true;
  }

  TaskStatus leaf(State& st, Outcome<V> o, Worker& w) {
    Leaf out;
    out.where = o.where;
    auto incomplete = [&](std::string why) {
      out.kind = LeafKind::Incomplete;
      out.reason = std::move(why);
      return TaskStatus::now(std::move(out));
    };
    switch (o.kind) {
      case OutcomeKind::Returned:
        out.values = std::move(o.values);
        if (st.incomplete) return incomplete(st.incomplete_reason);
        out.kind = LeafKind::Ok;
        return TaskStatus::now(std::move(out));
      case OutcomeKind::Abandoned: return incomplete(o.reason);
      case OutcomeKind::AssumptionFailed: return TaskStatus::stop();
      case OutcomeKind::Trapped:
        if (o.trap == TrapKind::FuelExhausted) {
          out.trap = o.trap;
          return incomplete(std::string(trap_message(o.trap)));
        }
        break;
      case OutcomeKind::AssertFailed: break;
    }
    if (!st.model_is_current()) {
      auto r = w.solver->check(st.pc);
      if (solver::is_unsat(r)) return TaskStatus::stop();
      if (auto* u = std::get_if<solver::Unknown>(&r)) return incomplete(u->reason);
      st.model = std::make_shared<const solver::Model>(std::move(std::get<solver::Sat>(r).model));
      st.model_pc = st.pc.head_ptr();
    }
    out.model = *st.model;
    for (std::size_t id = 0; id < st.symbols.size(); ++id)
      out.model.try_emplace(static_cast<std::uint32_t>(id), solver::Assignment{wat::bit_width(st.symbols[id]), 0});
    out.path = st.pc.conjuncts();
    if (!solver::model_satisfies(out.model, out.path))
      throw InternalError("reported model does not satisfy its path condition");
    if (o.kind == OutcomeKind::Trapped) {
      out.kind = LeafKind::Trap;
      out.trap = o.trap;
      out.message = std::string(trap_message(o.trap));
    } else {
      out.kind = LeafKind::AssertFailure;
      out.message = SymbolicValues::render_condition(o.condition);
    }
    return TaskStatus::now(std::move(out));
  }

  Interp* interp_ = nullptr;
  std::uint64_t yield_interval_;
};

}  // namespace wasym::interp
