#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wasym::wat {

inline constexpr std::uint64_t kPageSize = 65536;
inline constexpr std::uint32_t kMaxPages = 65536;

enum class ValueType : std::uint8_t { I32, I64 };

inline constexpr unsigned bit_width(ValueType t) { return t == ValueType::I32 ? 32 : 64; }

inline constexpr std::string_view type_name(ValueType t) { return t == ValueType::I32 ? "i32" : "i64"; }

enum class BinOp : std::uint8_t { Add, Sub, Mul, DivS, DivU, RemS, RemU, And, Or, Xor, Shl, ShrS, ShrU };

enum class RelOp : std::uint8_t { Eq, Ne, LtS, LtU, GtS, GtU, LeS, LeU, GeS, GeU };

inline constexpr std::string_view binop_name(BinOp op) {
  constexpr std::array<std::string_view, 13> names{"add",   "sub", "mul", "div_s", "div_u", "rem_s", "rem_u",
                                                   "and",   "or",  "xor", "shl",   "shr_s", "shr_u"};
  return names[static_cast<std::size_t>(op)];
}

inline constexpr std::string_view relop_name(RelOp op) {
  constexpr std::array<std::string_view, 10> names{"eq",   "ne",   "lt_s", "lt_u", "gt_s",
                                                   "gt_u", "le_s", "le_u", "ge_s", "ge_u"};
  return names[static_cast<std::size_t>(op)];
}

inline constexpr bool is_division(BinOp op) {
  return op == BinOp::DivS || op == BinOp::DivU || op == BinOp::RemS || op == BinOp::RemU;
}

enum class Opcode : std::uint8_t {
  // control
  Unreachable,
  Nop,
  Block,
  Loop,
  If,
  Br,
  BrIf,
  Return,
  Call,
  CallIndirect,
  // parametric
  Drop,
  Select,
  // variables
  LocalGet,
  LocalSet,
  LocalTee,
  GlobalGet,
  GlobalSet,
  // memory
  Load,
  Store,
  MemorySize,
  MemoryGrow,
  // numeric
  Const,
  Binary,
  Compare,
  Eqz,
  WrapI64,
  ExtendI32S,
  ExtendI32U,
};

/// A memory access shape: `<type>.load<bytes*8>_<sign>` / `<type>.store<bytes*8>`.
struct MemArg {
  std::uint8_t bytes = 4;
  bool sign_extend = false;
  std::uint32_t offset = 0;
  std::uint32_t align = 0;  // log2, as written; 0 when defaulted

  bool operator==(const MemArg&) const = default;
};

struct Instr {
  Opcode op = Opcode::Nop;
  /// Operand type for numeric and memory instructions.
  ValueType type = ValueType::I32;
  BinOp binop = BinOp::Add;
  RelOp relop = RelOp::Eq;
  /// Constant bits, local/global/function/type index, or branch depth.
  std::uint64_t imm = 0;
  MemArg mem{};
  /// Result type of block/loop/if.
  std::optional<ValueType> block_result;
  std::vector<Instr> body;
  std::vector<Instr> else_body;

  bool operator==(const Instr&) const = default;
};

struct FuncType {
  std::vector<ValueType> params;
  std::vector<ValueType> results;

  bool operator==(const FuncType&) const = default;
};

struct Function {
  std::string name;  // without the leading '$'; may be empty
  std::uint32_t type_index = 0;
  FuncType type;
  std::vector<ValueType> locals;
  std::vector<Instr> body;

  bool operator==(const Function&) const = default;
};

struct Import {
  std::string module;
  std::string field;
  std::string name;
  std::uint32_t type_index = 0;
  FuncType type;

  bool operator==(const Import&) const = default;
};

struct Global {
  std::string name;
  ValueType type = ValueType::I32;
  bool is_mutable = false;
  std::uint64_t init = 0;

  bool operator==(const Global&) const = default;
};

struct MemoryDecl {
  std::uint32_t min_pages = 0;
  std::optional<std::uint32_t> max_pages;

  bool operator==(const MemoryDecl&) const = default;
};

struct TableDecl {
  std::uint32_t min_size = 0;
  std::optional<std::uint32_t> max_size;

  bool operator==(const TableDecl&) const = default;
};

struct ElemSegment {
  std::uint32_t offset = 0;
  std::vector<std::uint32_t> functions;

  bool operator==(const ElemSegment&) const = default;
};

struct DataSegment {
  std::uint32_t offset = 0;
  std::string bytes;

  bool operator==(const DataSegment&) const = default;
};

struct Export {
  std::string name;
  std::uint32_t function = 0;

  bool operator==(const Export&) const = default;
};

/// A parsed module. Function indices cover imports first, then definitions.
struct Module {
  std::vector<FuncType> types;
  std::vector<Import> imports;
  std::vector<Function> functions;
  std::vector<Global> globals;
  std::optional<MemoryDecl> memory;
  std::optional<TableDecl> table;
  std::vector<ElemSegment> elems;
  std::vector<DataSegment> data;
  std::vector<Export> exports;

  std::size_t function_count() const { return imports.size() + functions.size(); }

  const FuncType& function_type(std::uint32_t index) const {
    return index < imports.size() ? imports[index].type : functions[index - imports.size()].type;
  }

  std::optional<std::uint32_t> find_export(std::string_view name) const {
    for (const auto& e : exports) {
      if (e.name == name) return e.function;
    }
    return std::nullopt;
  }

  bool operator==(const Module&) const = default;
};

/// Text mnemonic of an instruction, without immediates.
inline std::string mnemonic(const Instr& in) {
  const std::string ty{type_name(in.type)};
  switch (in.op) {
    case Opcode::Unreachable: return "unreachable";
    case Opcode::Nop: return "nop";
    case Opcode::Block: return "block";
    case Opcode::Loop: return "loop";
    case Opcode::If: return "if";
    case Opcode::Br: return "br";
    case Opcode::BrIf: return "br_if";
    case Opcode::Return: return "return";
    case Opcode::Call: return "call";
    case Opcode::CallIndirect: return "call_indirect";
    case Opcode::Drop: return "drop";
    case Opcode::Select: return "select";
    case Opcode::LocalGet: return "local.get";
    case Opcode::LocalSet: return "local.set";
    case Opcode::LocalTee: return "local.tee";
    case Opcode::GlobalGet: return "global.get";
    case Opcode::GlobalSet: return "global.set";
    case Opcode::Load: {
      const unsigned full = bit_width(in.type) / 8;
      if (in.mem.bytes == full) return ty + ".load";
      return ty + ".load" + std::to_string(in.mem.bytes * 8) + (in.mem.sign_extend ? "_s" : "_u");
    }
    case Opcode::Store: {
      const unsigned full = bit_width(in.type) / 8;
      if (in.mem.bytes == full) return ty + ".store";
      return ty + ".store" + std::to_string(in.mem.bytes * 8);
    }
    case Opcode::MemorySize: return "memory.size";
    case Opcode::MemoryGrow: return "memory.grow";
    case Opcode::Const: return ty + ".const";
    case Opcode::Binary: return ty + "." + std::string{binop_name(in.binop)};
    case Opcode::Compare: return ty + "." + std::string{relop_name(in.relop)};
    case Opcode::Eqz: return ty + ".eqz";
    case Opcode::WrapI64: return "i32.wrap_i64";
    case Opcode::ExtendI32S: return "i64.extend_i32_s";
    case Opcode::ExtendI32U: return "i64.extend_i32_u";
  }
  return "?";
}

}  // namespace wasym::wat
