#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "wasym/interp/outcome.hpp"
#include "wasym/interp/state.hpp"
#include "wasym/interp/values.hpp"
#include "wasym/values/trap.hpp"
#include "wasym/wat/link.hpp"

namespace wasym::interp {

/// The Wasm evaluator, generic in the value realization and in the choice effect.
///
/// Every point where execution may depend on a value goes through the choice object
/// in continuation-passing form: `choice.select(state, cond, k)` stands for
/// `bind(select cond, k)`. The continuation returns a `Step`, which is either
/// "keep going" or whatever the choice made of the rest of the path. A choice that
/// can answer immediately (the concrete one always can) just calls `k`; no
/// suspended computation is ever built in that case.
///
/// Choice requirements:
///   Step proceed();  bool is_proceed(const Step&);
///   Step finish(State&, Outcome<V>);
///   Step select(State&, V cond, K)      K: Step(State&, bool)
///   Step assume(State&, V cond, K)      K: Step(State&)
///   Step fresh(State&, ValueType, K)    K: Step(State&, V)
///   Step concretize(State&, V, K)       K: Step(State&, std::uint64_t)
///   std::optional<Step> tick(State&)    periodic chance to suspend a long path
template <class Values, class Choice>
class Interpreter {
 public:
  using V = typename Values::value;
  using State = ThreadState<Values>;
  using Step = typename Choice::Step;

  Interpreter(const wat::Instance& inst, Choice& choice) : inst_(inst), choice_(choice) {}

  const wat::Instance& instance() const { return inst_; }

  /// A state about to enter `func` (which takes no parameters), with globals,
  /// memory and data segments initialized.
  State initial_state(std::uint32_t func, std::uint64_t fuel) const {
    State s;
    s.instance = &inst_;
    s.fuel_left = fuel;
    const auto& m = *inst_.module;
    for (std::size_t i = 0; i < m.globals.size(); ++i) s.globals.push_back(Values::constant(m.globals[i].type, inst_.globals[i]));
    if (inst_.memory) {
      s.memory = typename State::Memory(inst_.memory->min_pages, inst_.memory->max_pages, Values::zero_byte());
      for (const auto& seg : m.data) {
        for (std::size_t i = 0; i < seg.bytes.size(); ++i) {
          const auto b = static_cast<std::uint8_t>(seg.bytes[i]);
          s.memory.store(static_cast<std::uint32_t>(seg.offset + i),
                         Values::byte_of(Values::constant(wat::ValueType::I32, b), 0));
        }
      }
    } else {
      s.memory = typename State::Memory(0, 0, Values::zero_byte());
    }
    enter(s, func);
    return s;
  }

  /// Executes until the path finishes or the choice suspends it.
  Step run(State& s) {
    for (;;) {
      if (s.frames.empty()) return choice_.finish(s, Outcome<V>::returned(std::move(s.stack)));
      if (auto t = choice_.tick(s)) return std::move(*t);
      Step r = exec(s);
      if (!choice_.is_proceed(r)) return r;
    }
  }

 private:
  Step proceed() { return choice_.proceed(); }

  Location here(const State& s, const wat::Instr* in) const {
    Location at;
    if (!s.frames.empty()) at.function = s.frames.back().function;
    if (in) at.instruction = wat::mnemonic(*in);
    return at;
  }

  Step trap(State& s, TrapKind k, const wat::Instr* in) {
    return choice_.finish(s, Outcome<V>::trapped(k, here(s, in)));
  }

  static V pop(State& s) {
    if (s.stack.size() <= s.labels.back().height) throw InternalError("operand stack underflow");
    V v = std::move(s.stack.back());
    s.stack.pop_back();
    return v;
  }

  static std::uint8_t arity_of(const std::optional<wat::ValueType>& t) { return t ? 1 : 0; }

  void enter(State& s, std::uint32_t func) const {
    const wat::Function& f = inst_.function(func);
    Frame<V> fr;
    fr.function = func;
    fr.arity = static_cast<std::uint8_t>(f.type.results.size());
    const std::size_t nparams = f.type.params.size();
    fr.locals.resize(nparams);
    for (std::size_t i = nparams; i-- > 0;) {
      fr.locals[i] = std::move(s.stack.back());
      s.stack.pop_back();
    }
    for (auto t : f.locals) fr.locals.push_back(Values::constant(t, 0));
    fr.stack_base = s.stack.size();
    fr.label_base = s.labels.size();
    s.frames.push_back(std::move(fr));
    s.labels.push_back(Label{&f.body, 0, s.stack.size(), s.frames.back().arity, false});
  }

  static void keep_top(State& s, std::size_t arity, std::size_t height) {
    if (s.stack.size() - height == arity) return;
    for (std::size_t i = 0; i < arity; ++i) s.stack[height + i] = std::move(s.stack[s.stack.size() - arity + i]);
    s.stack.resize(height + arity);
  }

  static void do_return(State& s) {
    const Frame<V>& fr = s.frames.back();
    keep_top(s, fr.arity, fr.stack_base);
    s.labels.resize(fr.label_base);
    s.frames.pop_back();
  }

  static void do_branch(State& s, std::uint64_t depth) {
    const std::size_t target = s.labels.size() - 1 - depth;
    if (target == s.frames.back().label_base) return do_return(s);
    Label& lab = s.labels[target];
    keep_top(s, lab.is_loop ? 0 : lab.arity, lab.height);
    if (lab.is_loop) {
      lab.pc = 0;
      s.labels.resize(target + 1);
    } else {
      s.labels.resize(target);
    }
  }

  Step call(State& s, std::uint32_t func, const wat::Instr* in) {
    if (!inst_.is_import(func)) {
      enter(s, func);
      return proceed();
    }
    switch (inst_.intrinsics[func]) {
      case wat::IntrinsicId::I32Symbol:
      case wat::IntrinsicId::I64Symbol: {
        const auto t = inst_.intrinsics[func] == wat::IntrinsicId::I32Symbol ? wat::ValueType::I32 : wat::ValueType::I64;
        return choice_.fresh(s, t, [this](State& st, V v) {
          st.stack.push_back(std::move(v));
          return proceed();
        });
      }
      case wat::IntrinsicId::Assume: {
        V c = pop(s);
        return choice_.assume(s, std::move(c), [this](State&) { return proceed(); });
      }
      case wat::IntrinsicId::Assert: {
        V c = pop(s);
        return choice_.select(s, c, [this, c, in](State& st, bool holds) {
          if (holds) return proceed();
          return choice_.finish(st, Outcome<V>::assert_failed(c, here(st, in)));
        });
      }
    }
    throw InternalError("unknown intrinsic");
  }

  Step call_table_entry(State& s, std::uint64_t index, const wat::Instr* in) {
    if (index >= inst_.table.size() || !inst_.table[index]) return trap(s, TrapKind::UndefinedTableElement, in);
    const std::uint32_t func = *inst_.table[index];
    if (inst_.module->function_type(func) != inst_.module->types[in->imm])
      return trap(s, TrapKind::IndirectCallTypeMismatch, in);
    return call(s, func, in);
  }

  // Enumerates table slots from `k` on: one branch per slot the index may equal.
  Step call_indirect_from(State& s, V index, std::uint32_t k, const wat::Instr* in) {
    if (k >= inst_.table.size()) return trap(s, TrapKind::UndefinedTableElement, in);
    V hit = Values::relop(RelOp::Eq, index, Values::constant(ValueType::I32, k));
    return choice_.select(s, std::move(hit), [this, index, k, in](State& st, bool is_k) {
      if (is_k) return call_table_entry(st, k, in);
      return call_indirect_from(st, index, k + 1, in);
    });
  }

  Step call_indirect(State& s, const wat::Instr* in) {
    V index = pop(s);
    if (auto c = Values::const_value(index)) return call_table_entry(s, *c, in);
    const auto size = static_cast<std::uint32_t>(inst_.table.size());
    V oob = Values::relop(RelOp::GeU, index, Values::constant(ValueType::I32, size));
    return choice_.select(s, std::move(oob), [this, index, in](State& st, bool out) {
      if (out) return trap(st, TrapKind::UndefinedTableElement, in);
      return call_indirect_from(st, index, 0, in);
    });
  }

  Step divide(State& s, const wat::Instr* in) {
    V b = pop(s);
    V a = pop(s);
    return choice_.select(s, Values::eqz(b), [this, a, b, in](State& st, bool zero) {
      if (zero) return trap(st, TrapKind::IntegerDivideByZero, in);
      if (in->binop != BinOp::DivS) {
        st.stack.push_back(Values::binop(in->binop, a, b));
        return proceed();
      }
      const ValueType t = in->type;
      const std::uint64_t min = t == ValueType::I32 ? 0x80000000ULL : 0x8000000000000000ULL;
      V overflow = Values::binop(BinOp::And, Values::relop(RelOp::Eq, a, Values::constant(t, min)),
                                 Values::relop(RelOp::Eq, b, Values::constant(t, ~0ULL)));
      return choice_.select(st, std::move(overflow), [this, a, b, in](State& st2, bool ovf) {
        if (ovf) return trap(st2, TrapKind::IntegerOverflow, in);
        st2.stack.push_back(Values::binop(BinOp::DivS, a, b));
        return proceed();
      });
    });
  }

  // Bounds check, then a concrete effective address.
  template <class K>
  Step access(State& s, const V& addr, const wat::Instr* in, K k) {
    V ea = Values::effective_address(addr, in->mem.offset);
    V end = Values::binop(BinOp::Add, ea, Values::constant(ValueType::I64, in->mem.bytes));
    V oob = Values::relop(RelOp::GtU, end, Values::constant(ValueType::I64, s.memory.size_bytes()));
    return choice_.select(s, std::move(oob), [this, ea, in, k](State& st, bool out) {
      if (out) return trap(st, TrapKind::OutOfBoundsMemory, in);
      return choice_.concretize(st, ea, [k](State& st2, std::uint64_t a) { return k(st2, static_cast<std::uint32_t>(a)); });
    });
  }

  Step load(State& s, const wat::Instr* in) {
    V addr = pop(s);
    return access(s, addr, in, [this, in](State& st, std::uint32_t a) {
      typename Values::byte bytes[8];
      for (unsigned i = 0; i < in->mem.bytes; ++i) bytes[i] = st.memory.load(a + i);
      st.stack.push_back(Values::from_bytes(bytes, in->mem.bytes, in->type, in->mem.sign_extend));
      return proceed();
    });
  }

  Step store(State& s, const wat::Instr* in) {
    V value = pop(s);
    V addr = pop(s);
    return access(s, addr, in, [this, value, in](State& st, std::uint32_t a) {
      for (unsigned i = 0; i < in->mem.bytes; ++i) st.memory.store(a + i, Values::byte_of(value, i));
      return proceed();
    });
  }

  Step exec(State& s) {
    Label& lab = s.labels.back();
    if (lab.pc == lab.body->size()) {
      if (s.labels.size() - 1 == s.frames.back().label_base) {
        do_return(s);
      } else {
        s.labels.pop_back();
      }
      return proceed();
    }
    if (s.fuel_left == 0) return trap(s, TrapKind::FuelExhausted, nullptr);
    --s.fuel_left;
    ++s.instructions;
    ++s.since_yield;
    const wat::Instr* in = &(*lab.body)[lab.pc++];
    using wat::Opcode;
    switch (in->op) {
      case Opcode::Unreachable: return trap(s, TrapKind::Unreachable, in);
      case Opcode::Nop: return proceed();
      case Opcode::Block:
      case Opcode::Loop:
        s.labels.push_back(Label{&in->body, 0, s.stack.size(), arity_of(in->block_result), in->op == Opcode::Loop});
        return proceed();
      case Opcode::If: {
        V c = pop(s);
        return choice_.select(s, std::move(c), [this, in](State& st, bool taken) {
          st.labels.push_back(Label{taken ? &in->body : &in->else_body, 0, st.stack.size(), arity_of(in->block_result), false});
          return proceed();
        });
      }
      case Opcode::Br: do_branch(s, in->imm); return proceed();
      case Opcode::BrIf: {
        V c = pop(s);
        return choice_.select(s, std::move(c), [this, in](State& st, bool taken) {
          if (taken) do_branch(st, in->imm);
          return proceed();
        });
      }
      case Opcode::Return: do_return(s); return proceed();
      case Opcode::Call: return call(s, static_cast<std::uint32_t>(in->imm), in);
      case Opcode::CallIndirect: return call_indirect(s, in);
      case Opcode::Drop: pop(s); return proceed();
      case Opcode::Select: {
        V c = pop(s);
        V b = pop(s);
        V a = pop(s);
        return choice_.select(s, std::move(c), [this, a, b](State& st, bool first) {
          st.stack.push_back(first ? a : b);
          return proceed();
        });
      }
      case Opcode::LocalGet: s.stack.push_back(s.frames.back().locals[in->imm]); return proceed();
      case Opcode::LocalSet: s.frames.back().locals[in->imm] = pop(s); return proceed();
      case Opcode::LocalTee:
        if (s.stack.size() <= s.labels.back().height) throw InternalError("operand stack underflow");
        s.frames.back().locals[in->imm] = s.stack.back();
        return proceed();
      case Opcode::GlobalGet: s.stack.push_back(s.globals[in->imm]); return proceed();
      case Opcode::GlobalSet: s.globals[in->imm] = pop(s); return proceed();
      case Opcode::Load: return load(s, in);
      case Opcode::Store: return store(s, in);
      case Opcode::MemorySize:
        s.stack.push_back(Values::constant(ValueType::I32, s.memory.pages()));
        return proceed();
      case Opcode::MemoryGrow: {
        V delta = pop(s);
        return choice_.concretize(s, delta, [this](State& st, std::uint64_t d) {
          const std::int64_t r = st.memory.grow(static_cast<std::uint32_t>(d));
          st.stack.push_back(Values::constant(ValueType::I32, static_cast<std::uint32_t>(r)));
          return proceed();
        });
      }
      case Opcode::Const: s.stack.push_back(Values::constant(in->type, in->imm)); return proceed();
      case Opcode::Binary: {
        if (wat::is_division(in->binop)) return divide(s, in);
        V b = pop(s);
        V a = pop(s);
        s.stack.push_back(Values::binop(in->binop, a, b));
        return proceed();
      }
      case Opcode::Compare: {
        V b = pop(s);
        V a = pop(s);
        s.stack.push_back(Values::relop(in->relop, a, b));
        return proceed();
      }
      case Opcode::Eqz: s.stack.push_back(Values::eqz(pop(s))); return proceed();
      case Opcode::WrapI64: s.stack.push_back(Values::wrap(pop(s))); return proceed();
      case Opcode::ExtendI32S: s.stack.push_back(Values::extend(pop(s), true)); return proceed();
      case Opcode::ExtendI32U: s.stack.push_back(Values::extend(pop(s), false)); return proceed();
    }
    throw InternalError("unhandled opcode");
  }

  const wat::Instance& inst_;
  Choice& choice_;
};

}  // namespace wasym::interp
