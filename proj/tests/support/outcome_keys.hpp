#pragma once

#include <string>

#include "wasym/interp/run.hpp"

namespace wasym::test_support {

/// Summarizes a concrete outcome in the vocabulary of symbolic leaves.
inline std::string concrete_key(const interp::Outcome<values::ConcreteValue>& o) {
  using interp::OutcomeKind;
  switch (o.kind) {
    case OutcomeKind::Returned: {
      std::string s = "ok";
      for (const auto& v : o.values) s += " " + std::to_string(v.bits);
      return s;
    }
    case OutcomeKind::Trapped:
      // symbolic mode reports an exhausted budget as an unexplored path
      if (o.trap == TrapKind::FuelExhausted) return "incomplete fuel exhausted";
      return "trap " + std::string(trap_message(o.trap));
    case OutcomeKind::AssertFailed: return "assert " + interp::ConcreteValues::render_condition(o.condition);
    case OutcomeKind::AssumptionFailed: return "pruned";
    case OutcomeKind::Abandoned: return "incomplete " + o.reason;
  }
  return "?";
}

inline std::string leaf_key(const interp::Leaf& l) {
  using interp::LeafKind;
  switch (l.kind) {
    case LeafKind::Ok: {
      std::string s = "ok";
      for (const auto& v : l.values) {
        auto c = sym::const_value(v);
        s += c ? " " + std::to_string(*c) : " <symbolic>";
      }
      return s;
    }
    case LeafKind::Trap: return "trap " + l.message;
    case LeafKind::AssertFailure: return "assert " + l.message;
    case LeafKind::Incomplete: return "incomplete " + l.reason;
  }
  return "?";
}

}  // namespace wasym::test_support
