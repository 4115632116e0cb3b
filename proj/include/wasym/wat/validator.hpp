#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wasym/wat/ast.hpp"

namespace wasym::wat {

class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::uint32_t function, std::size_t offset, const std::string& message)
      : std::runtime_error("function " + std::to_string(function) + ", instruction " + std::to_string(offset) + ": " +
                           message),
        function_(function),
        offset_(offset) {}

  std::uint32_t function_index() const { return function_; }
  std::size_t instruction_offset() const { return offset_; }

 private:
  std::uint32_t function_;
  std::size_t offset_;
};

/// A module that passed type checking. Only `validate` creates one.
class ValidatedModule {
 public:
  const Module& module() const { return *module_; }
  std::shared_ptr<const Module> shared() const { return module_; }

 private:
  explicit ValidatedModule(std::shared_ptr<const Module> m) : module_(std::move(m)) {}
  friend ValidatedModule validate(Module m);
  std::shared_ptr<const Module> module_;
};

namespace detail {

class FunctionChecker {
 public:
  FunctionChecker(const Module& m, std::uint32_t func_index, const Function& f)
      : m_(m), func_index_(func_index), f_(f) {
    locals_ = f.type.params;
    locals_.insert(locals_.end(), f.locals.begin(), f.locals.end());
  }

  void run() {
    push_ctrl(f_.type.results.empty() ? std::nullopt : std::optional{f_.type.results.front()}, false);
    if (f_.type.results.size() > 1) error("multi-value results are not supported");
    check_seq(f_.body);
    end_ctrl();
  }

 private:
  using Slot = std::optional<ValueType>;  // nullopt: unknown (polymorphic stack)

  struct Ctrl {
    std::optional<ValueType> result;
    bool is_loop = false;
    std::size_t height = 0;
    bool unreachable = false;
  };

  [[noreturn]] void error(const std::string& msg) const { throw ValidationError(func_index_, offset_, msg); }

  static std::string show(Slot s) { return s ? std::string{type_name(*s)} : std::string{"any"}; }

  void push(Slot t) { stack_.push_back(t); }

  Slot pop() {
    const Ctrl& c = ctrls_.back();
    if (stack_.size() == c.height) {
      if (c.unreachable) return std::nullopt;
      error("stack underflow");
    }
    Slot t = stack_.back();
    stack_.pop_back();
    return t;
  }

  Slot pop(ValueType expected) {
    Slot actual = pop();
    if (actual && *actual != expected)
      error("type mismatch: expected " + std::string{type_name(expected)} + ", found " + show(actual));
    return actual ? actual : Slot{expected};
  }

  void push_ctrl(std::optional<ValueType> result, bool is_loop) {
    ctrls_.push_back(Ctrl{result, is_loop, stack_.size(), false});
  }

  void end_ctrl() {
    const Ctrl c = ctrls_.back();
    if (c.result) pop(*c.result);
    if (stack_.size() != c.height)
      error("type mismatch: " + std::to_string(stack_.size() - c.height) + " extra value(s) at end of block");
    ctrls_.pop_back();
    if (c.result) push(*c.result);
  }

  void mark_unreachable() {
    stack_.resize(ctrls_.back().height);
    ctrls_.back().unreachable = true;
  }

  std::optional<ValueType> label_type(std::uint64_t depth) const {
    if (depth >= ctrls_.size()) error("branch depth " + std::to_string(depth) + " out of range");
    const Ctrl& c = ctrls_[ctrls_.size() - 1 - depth];
    return c.is_loop ? std::nullopt : c.result;
  }

  ValueType local(std::uint64_t i) const {
    if (i >= locals_.size()) error("local index " + std::to_string(i) + " out of range");
    return locals_[i];
  }

  const Global& global(std::uint64_t i) const {
    if (i >= m_.globals.size()) error("global index " + std::to_string(i) + " out of range");
    return m_.globals[i];
  }

  void need_memory() const {
    if (!m_.memory) error("memory instruction without a declared memory");
  }

  void call(const FuncType& t) {
    for (auto it = t.params.rbegin(); it != t.params.rend(); ++it) pop(*it);
    if (t.results.size() > 1) error("multi-value results are not supported");
    for (auto r : t.results) push(r);
  }

  void check_seq(const std::vector<Instr>& seq) {
    for (const Instr& in : seq) {
      check(in);
      ++offset_;
    }
  }

  void check(const Instr& in) {
    switch (in.op) {
      case Opcode::Unreachable: mark_unreachable(); break;
      case Opcode::Nop: break;
      case Opcode::Block:
      case Opcode::Loop:
        push_ctrl(in.block_result, in.op == Opcode::Loop);
        ++offset_;
        check_seq(in.body);
        --offset_;
        end_ctrl();
        break;
      case Opcode::If: {
        pop(ValueType::I32);
        if (in.else_body.empty() && in.block_result) error("if without else must not produce a value");
        push_ctrl(in.block_result, false);
        ++offset_;
        check_seq(in.body);
        const Ctrl c = ctrls_.back();
        end_ctrl();
        if (c.result) stack_.pop_back();
        push_ctrl(in.block_result, false);
        check_seq(in.else_body);
        --offset_;
        end_ctrl();
        break;
      }
      case Opcode::Br: {
        auto t = label_type(in.imm);
        if (t) pop(*t);
        mark_unreachable();
        break;
      }
      case Opcode::BrIf: {
        pop(ValueType::I32);
        auto t = label_type(in.imm);
        if (t) {
          pop(*t);
          push(*t);
        }
        break;
      }
      case Opcode::Return: {
        for (auto it = f_.type.results.rbegin(); it != f_.type.results.rend(); ++it) pop(*it);
        mark_unreachable();
        break;
      }
      case Opcode::Call:
        if (in.imm >= m_.function_count()) error("function index " + std::to_string(in.imm) + " out of range");
        call(m_.function_type(static_cast<std::uint32_t>(in.imm)));
        break;
      case Opcode::CallIndirect:
        if (!m_.table) error("call_indirect without a table");
        if (in.imm >= m_.types.size()) error("type index " + std::to_string(in.imm) + " out of range");
        pop(ValueType::I32);
        call(m_.types[in.imm]);
        break;
      case Opcode::Drop: pop(); break;
      case Opcode::Select: {
        pop(ValueType::I32);
        Slot a = pop();
        Slot b = pop();
        if (a && b && *a != *b) error("type mismatch in select: " + show(b) + " vs " + show(a));
        push(a ? a : b);
        break;
      }
      case Opcode::LocalGet: push(local(in.imm)); break;
      case Opcode::LocalSet: pop(local(in.imm)); break;
      case Opcode::LocalTee: {
        const ValueType t = local(in.imm);
        pop(t);
        push(t);
        break;
      }
      case Opcode::GlobalGet: push(global(in.imm).type); break;
      case Opcode::GlobalSet: {
        const Global& g = global(in.imm);
        if (!g.is_mutable) error("global " + std::to_string(in.imm) + " is immutable");
        pop(g.type);
        break;
      }
      case Opcode::Load:
      case Opcode::Store: {
        need_memory();
        if (in.mem.align != 0 && ((in.mem.align & (in.mem.align - 1)) != 0 || in.mem.align > in.mem.bytes))
          error("invalid alignment " + std::to_string(in.mem.align));
        if (in.op == Opcode::Load) {
          pop(ValueType::I32);
          push(in.type);
        } else {
          pop(in.type);
          pop(ValueType::I32);
        }
        break;
      }
      case Opcode::MemorySize: need_memory(); push(ValueType::I32); break;
      case Opcode::MemoryGrow:
        need_memory();
        pop(ValueType::I32);
        push(ValueType::I32);
        break;
      case Opcode::Const: push(in.type); break;
      case Opcode::Binary:
        pop(in.type);
        pop(in.type);
        push(in.type);
        break;
      case Opcode::Compare:
        pop(in.type);
        pop(in.type);
        push(ValueType::I32);
        break;
      case Opcode::Eqz:
        pop(in.type);
        push(ValueType::I32);
        break;
      case Opcode::WrapI64:
        pop(ValueType::I64);
        push(ValueType::I32);
        break;
      case Opcode::ExtendI32S:
      case Opcode::ExtendI32U:
        pop(ValueType::I32);
        push(ValueType::I64);
        break;
    }
  }

  const Module& m_;
  std::uint32_t func_index_;
  const Function& f_;
  std::vector<ValueType> locals_;
  std::vector<Slot> stack_;
  std::vector<Ctrl> ctrls_;
  std::size_t offset_ = 0;
};

}  // namespace detail

/// Type-checks every function body and the module-level index references.
inline ValidatedModule validate(Module m) {
  for (std::size_t i = 0; i < m.functions.size(); ++i) {
    const auto index = static_cast<std::uint32_t>(m.imports.size() + i);
    if (m.functions[i].type_index >= m.types.size()) throw ValidationError(index, 0, "type index out of range");
    detail::FunctionChecker(m, index, m.functions[i]).run();
  }
  for (const auto& e : m.exports) {
    if (e.function >= m.function_count())
      throw ValidationError(e.function, 0, "export \"" + e.name + "\" refers to an unknown function");
  }
  for (const auto& seg : m.elems) {
    if (!m.table) throw ValidationError(0, 0, "element segment without a table");
    for (auto f : seg.functions) {
      if (f >= m.function_count()) throw ValidationError(f, 0, "element segment refers to an unknown function");
    }
  }
  if (!m.data.empty() && !m.memory) throw ValidationError(0, 0, "data segment without a memory");
  if (m.memory && m.memory->max_pages && *m.memory->max_pages < m.memory->min_pages)
    throw ValidationError(0, 0, "memory maximum is below its minimum");
  return ValidatedModule(std::make_shared<const Module>(std::move(m)));
}

}  // namespace wasym::wat
