#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "wasym/memory/snapshot.hpp"
#include "wasym/solver/model.hpp"
#include "wasym/values/path_condition.hpp"
#include "wasym/wat/link.hpp"

namespace wasym::interp {

/// A structured-control scope: the instruction sequence being executed and where
/// branches to it leave the operand stack.
struct Label {
  const std::vector<wat::Instr>* body = nullptr;
  std::size_t pc = 0;
  std::size_t height = 0;
  std::uint8_t arity = 0;  // values kept by a branch to the end of this scope
  bool is_loop = false;
};

template <class V>
struct Frame {
  std::uint32_t function = 0;
  std::vector<V> locals;
  std::size_t stack_base = 0;
  std::size_t label_base = 0;
  std::uint8_t arity = 0;
};

/// One path's complete machine state. Copying it copies the stacks and shares memory
/// copy-on-write, so forking costs O(stack + locals).
template <class Values>
struct ThreadState {
  using V = typename Values::value;
  using Memory = mem::MemorySnapshot<typename Values::byte>;

  const wat::Instance* instance = nullptr;
  std::vector<V> stack;
  std::vector<Frame<V>> frames;
  std::vector<Label> labels;
  std::vector<V> globals;
  Memory memory;

  sym::PathCondition pc;
  /// Types of the symbols minted on this path; the index is the symbol id.
  std::vector<wat::ValueType> symbols;

  std::uint64_t fuel_left = 0;
  std::uint64_t since_yield = 0;
  std::uint64_t instructions = 0;

  /// Set when a solver query along the path returned Unknown.
  bool incomplete = false;
  std::string incomplete_reason;

  /// Most recent satisfying model and the path condition it was computed for.
  std::shared_ptr<const solver::Model> model;
  std::shared_ptr<const sym::PathCondition::Node> model_pc;

  bool model_is_current() const { return model && model_pc == pc.head_ptr(); }
};

}  // namespace wasym::interp
