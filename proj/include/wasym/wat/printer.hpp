#pragma once

#include <cstdio>
#include <sstream>
#include <string>

#include "wasym/wat/ast.hpp"

namespace wasym::wat {

namespace detail {

inline void print_types(std::ostream& os, const std::vector<ValueType>& ts, const char* kw) {
  if (ts.empty()) return;
  os << " (" << kw;
  for (auto t : ts) os << ' ' << type_name(t);
  os << ')';
}

inline std::string print_const(ValueType t, std::uint64_t bits) {
  if (t == ValueType::I32) return std::to_string(static_cast<std::int32_t>(static_cast<std::uint32_t>(bits)));
  return std::to_string(static_cast<std::int64_t>(bits));
}

inline void print_body(std::ostream& os, const std::vector<Instr>& body, int depth) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  for (const Instr& in : body) {
    os << pad << mnemonic(in);
    switch (in.op) {
      case Opcode::Block:
      case Opcode::Loop:
      case Opcode::If:
        if (in.block_result) os << " (result " << type_name(*in.block_result) << ')';
        os << '\n';
        print_body(os, in.body, depth + 1);
        if (in.op == Opcode::If && !in.else_body.empty()) {
          os << pad << "else\n";
          print_body(os, in.else_body, depth + 1);
        }
        os << pad << "end";
        break;
      case Opcode::Br:
      case Opcode::BrIf:
      case Opcode::Call:
      case Opcode::LocalGet:
      case Opcode::LocalSet:
      case Opcode::LocalTee:
      case Opcode::GlobalGet:
      case Opcode::GlobalSet: os << ' ' << in.imm; break;
      case Opcode::CallIndirect: os << " (type " << in.imm << ')'; break;
      case Opcode::Const: os << ' ' << print_const(in.type, in.imm); break;
      case Opcode::Load:
      case Opcode::Store:
        if (in.mem.offset) os << " offset=" << in.mem.offset;
        if (in.mem.align) os << " align=" << in.mem.align;
        break;
      default: break;
    }
    os << '\n';
  }
}

}  // namespace detail

/// Renders a module as canonical flat Wasm text; indices are printed numerically.
inline std::string print_module(const Module& m) {
  std::ostringstream os;
  os << "(module\n";
  for (const auto& t : m.types) {
    os << "  (type (func";
    detail::print_types(os, t.params, "param");
    detail::print_types(os, t.results, "result");
    os << "))\n";
  }
  for (const auto& imp : m.imports) {
    os << "  (import \"" << imp.module << "\" \"" << imp.field << "\" (func";
    if (!imp.name.empty()) os << " $" << imp.name;
    os << " (type " << imp.type_index << ")))\n";
  }
  if (m.memory) {
    os << "  (memory " << m.memory->min_pages;
    if (m.memory->max_pages) os << ' ' << *m.memory->max_pages;
    os << ")\n";
  }
  if (m.table) {
    os << "  (table " << m.table->min_size;
    if (m.table->max_size) os << ' ' << *m.table->max_size;
    os << " funcref)\n";
  }
  for (const auto& g : m.globals) {
    os << "  (global";
    if (!g.name.empty()) os << " $" << g.name;
    if (g.is_mutable) {
      os << " (mut " << type_name(g.type) << ')';
    } else {
      os << ' ' << type_name(g.type);
    }
    os << " (" << type_name(g.type) << ".const " << detail::print_const(g.type, g.init) << "))\n";
  }
  for (const auto& f : m.functions) {
    os << "  (func";
    if (!f.name.empty()) os << " $" << f.name;
    os << " (type " << f.type_index << ')';
    detail::print_types(os, f.type.params, "param");
    detail::print_types(os, f.type.results, "result");
    detail::print_types(os, f.locals, "local");
    os << '\n';
    detail::print_body(os, f.body, 2);
    os << "  )\n";
  }
  for (const auto& e : m.exports) os << "  (export \"" << e.name << "\" (func " << e.function << "))\n";
  for (const auto& e : m.elems) {
    os << "  (elem (i32.const " << static_cast<std::int32_t>(e.offset) << ")";
    for (auto f : e.functions) os << ' ' << f;
    os << ")\n";
  }
  for (const auto& d : m.data) {
    os << "  (data (i32.const " << static_cast<std::int32_t>(d.offset) << ") \"";
    for (unsigned char c : d.bytes) {
      char buf[4];
      std::snprintf(buf, sizeof buf, "\\%02x", c);
      os << buf;
    }
    os << "\")\n";
  }
  os << ")\n";
  return os.str();
}

}  // namespace wasym::wat
