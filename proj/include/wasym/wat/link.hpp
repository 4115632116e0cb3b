#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wasym/wat/ast.hpp"
#include "wasym/wat/validator.hpp"

namespace wasym::wat {

/// Host functions the engine provides under the "owi" import namespace.
enum class IntrinsicId : std::uint8_t { I32Symbol, I64Symbol, Assume, Assert };

inline constexpr std::string_view kIntrinsicModule = "owi";

class LinkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An executable module: imports bound, initial globals, table and memory image computed.
struct Instance {
  std::shared_ptr<const Module> module;
  std::vector<IntrinsicId> intrinsics;  // one per import, by import index
  std::vector<std::uint64_t> globals;
  std::optional<MemoryDecl> memory;
  std::vector<std::optional<std::uint32_t>> table;

  std::uint64_t memory_bytes() const { return memory ? std::uint64_t{memory->min_pages} * kPageSize : 0; }

  bool is_import(std::uint32_t func) const { return func < intrinsics.size(); }

  const Function& function(std::uint32_t func) const { return module->functions[func - intrinsics.size()]; }
};

namespace detail {

inline std::optional<std::pair<IntrinsicId, FuncType>> intrinsic_signature(std::string_view field) {
  using enum ValueType;
  if (field == "i32_symbol") return std::pair{IntrinsicId::I32Symbol, FuncType{{}, {I32}}};
  if (field == "i64_symbol") return std::pair{IntrinsicId::I64Symbol, FuncType{{}, {I64}}};
  if (field == "assume") return std::pair{IntrinsicId::Assume, FuncType{{I32}, {}}};
  if (field == "assert") return std::pair{IntrinsicId::Assert, FuncType{{I32}, {}}};
  return std::nullopt;
}

}  // namespace detail

inline Instance link(const ValidatedModule& vm) {
  const Module& m = vm.module();
  Instance inst;
  inst.module = vm.shared();
  for (const auto& imp : m.imports) {
    auto sig = imp.module == kIntrinsicModule ? detail::intrinsic_signature(imp.field) : std::nullopt;
    if (!sig) throw LinkError("unknown import \"" + imp.module + "\" \"" + imp.field + "\"");
    if (sig->second != imp.type)
      throw LinkError("incompatible import type for \"" + imp.module + "\" \"" + imp.field + "\"");
    inst.intrinsics.push_back(sig->first);
  }
  for (const auto& g : m.globals) inst.globals.push_back(g.init);
  inst.memory = m.memory;
  if (m.table) {
    inst.table.assign(m.table->min_size, std::nullopt);
    for (const auto& seg : m.elems) {
      if (std::uint64_t{seg.offset} + seg.functions.size() > inst.table.size())
        throw LinkError("element segment does not fit in the table");
      for (std::size_t i = 0; i < seg.functions.size(); ++i) inst.table[seg.offset + i] = seg.functions[i];
    }
  }
  for (const auto& d : m.data) {
    if (std::uint64_t{d.offset} + d.bytes.size() > inst.memory_bytes())
      throw LinkError("data segment does not fit in memory");
  }
  return inst;
}

/// Index of the exported, parameterless `main` function.
inline std::uint32_t entry_point(const Instance& inst) {
  auto idx = inst.module->find_export("main");
  if (!idx) throw LinkError("no exported function \"main\"");
  if (!inst.module->function_type(*idx).params.empty()) throw LinkError("\"main\" must not take parameters");
  return *idx;
}

}  // namespace wasym::wat
