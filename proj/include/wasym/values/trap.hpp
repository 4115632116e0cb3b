#pragma once

#include <cstdint>
#include <string_view>

namespace wasym {

enum class TrapKind : std::uint8_t {
  Unreachable,
  OutOfBoundsMemory,
  IntegerDivideByZero,
  IntegerOverflow,
  IndirectCallTypeMismatch,
  UndefinedTableElement,
  FuelExhausted,
};

/// Message printed after "Trap: " in reports.
inline constexpr std::string_view trap_message(TrapKind k) {
  switch (k) {
    case TrapKind::Unreachable: return "unreachable";
    case TrapKind::OutOfBoundsMemory: return "memory heap buffer overflow";
    case TrapKind::IntegerDivideByZero: return "integer divide by zero";
    case TrapKind::IntegerOverflow: return "integer overflow";
    case TrapKind::IndirectCallTypeMismatch: return "indirect call type mismatch";
    case TrapKind::UndefinedTableElement: return "undefined element";
    case TrapKind::FuelExhausted: return "fuel exhausted";
  }
  return "unknown trap";
}

struct TrapSignal {
  TrapKind kind;
  bool operator==(const TrapSignal&) const = default;
};

}  // namespace wasym
