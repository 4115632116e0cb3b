#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "wasym/interp/outcome.hpp"
#include "wasym/values/concrete.hpp"
#include "wasym/values/expr.hpp"

namespace wasym::interp {

using wat::BinOp;
using wat::RelOp;
using wat::ValueType;

/// Machine integers.
struct ConcreteValues {
  using value = values::ConcreteValue;
  using byte = std::uint8_t;

  static value constant(ValueType t, std::uint64_t bits) {
    return t == ValueType::I32 ? value::i32(static_cast<std::uint32_t>(bits)) : value::i64(bits);
  }
  static ValueType type_of(const value& v) { return v.type; }

  /// Callers rule out trapping operands first.
  static value binop(BinOp op, const value& a, const value& b) {
    auto r = values::concrete_binop(op, a, b);
    if (auto* v = std::get_if<value>(&r)) return *v;
    throw InternalError("unguarded trapping " + std::string(wat::binop_name(op)));
  }
  static value relop(RelOp op, const value& a, const value& b) { return values::concrete_relop(op, a, b); }
  static value eqz(const value& a) { return values::concrete_eqz(a); }
  static value wrap(const value& a) { return values::concrete_wrap(a); }
  static value extend(const value& a, bool sign) { return values::concrete_extend(a, sign); }
  static std::optional<std::uint64_t> const_value(const value& v) { return v.bits; }

  static value effective_address(const value& addr, std::uint32_t offset) {
    return value::i64(std::uint64_t{addr.u32()} + offset);
  }

  static byte zero_byte() { return 0; }
  static byte byte_of(const value& v, unsigned i) { return static_cast<byte>(v.bits >> (8 * i)); }

  /// Little-endian bytes [0, n) assembled and extended to `t`.
  static value from_bytes(const byte* bytes, unsigned n, ValueType t, bool sign) {
    std::uint64_t bits = 0;
    for (unsigned i = n; i-- > 0;) bits = (bits << 8) | bytes[i];
    const unsigned w = bit_width(t);
    if (sign && 8 * n < w) bits = static_cast<std::uint64_t>(sym::to_signed(bits, 8 * n));
    return constant(t, bits & sym::mask(w));
  }

  static std::string render_condition(const value& v) { return v.truthy() ? "true" : "false"; }
};

/// Bitvector expressions with constant folding.
struct SymbolicValues {
  using value = sym::ExprPtr;
  using byte = sym::ExprPtr;

  static value constant(ValueType t, std::uint64_t bits) {
    return sym::constant(bit_width(t), bits & sym::mask(bit_width(t)));
  }
  static ValueType type_of(const value& v) { return v->width == 64 ? ValueType::I64 : ValueType::I32; }

  static value binop(BinOp op, const value& a, const value& b) { return sym::binop(op, a, b); }
  static value relop(RelOp op, const value& a, const value& b) { return sym::relop(op, a, b); }
  static value eqz(const value& a) { return sym::eqz(a); }
  static value wrap(const value& a) { return sym::extract(a, 3, 0); }
  static value extend(const value& a, bool sign) { return sym::extend(a, 64, sign); }
  static std::optional<std::uint64_t> const_value(const value& v) { return sym::const_value(v); }

  static value effective_address(const value& addr, std::uint32_t offset) {
    return sym::binop(BinOp::Add, sym::extend(addr, 64, false), sym::constant(64, offset));
  }

  static byte zero_byte() { return sym::constant(8, 0); }
  static byte byte_of(const value& v, unsigned i) { return sym::extract(v, i, i); }

  static value from_bytes(const byte* bytes, unsigned n, ValueType t, bool sign) {
    value acc = bytes[n - 1];
    for (unsigned i = n - 1; i-- > 0;) acc = sym::concat(acc, bytes[i]);
    if (acc->width < bit_width(t)) acc = sym::extend(acc, bit_width(t), sign);
    return acc;
  }

  static std::string render_condition(const value& v) {
    if (auto c = sym::const_value(v)) return *c ? "true" : "false";
    return sym::render(v);
  }
};

}  // namespace wasym::interp
