#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <variant>

#include "wasym/values/trap.hpp"
#include "wasym/wat/ast.hpp"

namespace wasym::values {

using wat::BinOp;
using wat::RelOp;
using wat::ValueType;

/// A Wasm integer: 32-bit values keep their upper 32 bits zero.
struct ConcreteValue {
  ValueType type = ValueType::I32;
  std::uint64_t bits = 0;

  static constexpr ConcreteValue i32(std::uint32_t v) { return {ValueType::I32, v}; }
  static constexpr ConcreteValue i32(std::int32_t v) { return {ValueType::I32, static_cast<std::uint32_t>(v)}; }
  static constexpr ConcreteValue i64(std::uint64_t v) { return {ValueType::I64, v}; }
  static constexpr ConcreteValue i64(std::int64_t v) { return {ValueType::I64, static_cast<std::uint64_t>(v)}; }

  constexpr std::uint32_t u32() const { return static_cast<std::uint32_t>(bits); }
  constexpr std::int32_t s32() const { return static_cast<std::int32_t>(static_cast<std::uint32_t>(bits)); }
  constexpr std::uint64_t u64() const { return bits; }
  constexpr std::int64_t s64() const { return static_cast<std::int64_t>(bits); }
  constexpr bool truthy() const { return bits != 0; }

  bool operator==(const ConcreteValue&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, const ConcreteValue& v) {
  if (v.type == ValueType::I32) return os << "(i32 " << v.s32() << ')';
  return os << "(i64 " << v.s64() << ')';
}

namespace detail {

template <class U, class S>
std::variant<U, TrapSignal> int_binop(BinOp op, U a, U b) {
  constexpr unsigned bits = sizeof(U) * 8;
  const S sa = static_cast<S>(a);
  const S sb = static_cast<S>(b);
  switch (op) {
    case BinOp::Add: return static_cast<U>(a + b);
    case BinOp::Sub: return static_cast<U>(a - b);
    case BinOp::Mul: return static_cast<U>(a * b);
    case BinOp::DivS:
      if (b == 0) return TrapSignal{TrapKind::IntegerDivideByZero};
      if (sa == std::numeric_limits<S>::min() && sb == -1) return TrapSignal{TrapKind::IntegerOverflow};
      return static_cast<U>(sa / sb);
    case BinOp::DivU:
      if (b == 0) return TrapSignal{TrapKind::IntegerDivideByZero};
      return static_cast<U>(a / b);
    case BinOp::RemS:
      if (b == 0) return TrapSignal{TrapKind::IntegerDivideByZero};
      if (sb == -1) return U{0};
      return static_cast<U>(sa % sb);
    case BinOp::RemU:
      if (b == 0) return TrapSignal{TrapKind::IntegerDivideByZero};
      return static_cast<U>(a % b);
    case BinOp::And: return static_cast<U>(a & b);
    case BinOp::Or: return static_cast<U>(a | b);
    case BinOp::Xor: return static_cast<U>(a ^ b);
    case BinOp::Shl: return static_cast<U>(a << (b % bits));
    case BinOp::ShrS: return static_cast<U>(sa >> (b % bits));
    case BinOp::ShrU: return static_cast<U>(a >> (b % bits));
  }
  return U{0};
}

template <class U, class S>
bool int_relop(RelOp op, U a, U b) {
  const S sa = static_cast<S>(a);
  const S sb = static_cast<S>(b);
  switch (op) {
    case RelOp::Eq: return a == b;
    case RelOp::Ne: return a != b;
    case RelOp::LtS: return sa < sb;
    case RelOp::LtU: return a < b;
    case RelOp::GtS: return sa > sb;
    case RelOp::GtU: return a > b;
    case RelOp::LeS: return sa <= sb;
    case RelOp::LeU: return a <= b;
    case RelOp::GeS: return sa >= sb;
    case RelOp::GeU: return a >= b;
  }
  return false;
}

}  // namespace detail

/// Wasm integer arithmetic. `c1` is the second-from-top operand, `c2` the top.
inline std::variant<ConcreteValue, TrapSignal> concrete_binop(BinOp op, ConcreteValue c1, ConcreteValue c2) {
  if (c1.type == ValueType::I32) {
    auto r = detail::int_binop<std::uint32_t, std::int32_t>(op, c1.u32(), c2.u32());
    if (auto* t = std::get_if<TrapSignal>(&r)) return *t;
    return ConcreteValue::i32(std::get<std::uint32_t>(r));
  }
  auto r = detail::int_binop<std::uint64_t, std::int64_t>(op, c1.u64(), c2.u64());
  if (auto* t = std::get_if<TrapSignal>(&r)) return *t;
  return ConcreteValue::i64(std::get<std::uint64_t>(r));
}

inline ConcreteValue concrete_relop(RelOp op, ConcreteValue c1, ConcreteValue c2) {
  const bool r = c1.type == ValueType::I32 ? detail::int_relop<std::uint32_t, std::int32_t>(op, c1.u32(), c2.u32())
                                           : detail::int_relop<std::uint64_t, std::int64_t>(op, c1.u64(), c2.u64());
  return ConcreteValue::i32(static_cast<std::uint32_t>(r));
}

inline ConcreteValue concrete_eqz(ConcreteValue c) { return ConcreteValue::i32(static_cast<std::uint32_t>(c.bits == 0)); }

inline ConcreteValue concrete_wrap(ConcreteValue c) { return ConcreteValue::i32(c.u32()); }

inline ConcreteValue concrete_extend(ConcreteValue c, bool sign) {
  return sign ? ConcreteValue::i64(static_cast<std::int64_t>(c.s32())) : ConcreteValue::i64(std::uint64_t{c.u32()});
}

}  // namespace wasym::values
