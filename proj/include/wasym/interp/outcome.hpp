#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wasym/values/trap.hpp"

namespace wasym::interp {

/// A broken engine invariant. Never a property of the program under analysis.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The run was requested in a way that cannot be honored (e.g. symbols in concrete mode
/// without a model, or a model that does not fit the program).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OutcomeKind : std::uint8_t {
  Returned,
  Trapped,
  AssertFailed,
  /// Concrete run whose assumption did not hold; the path is outside the harness' domain.
  AssumptionFailed,
  /// The solver could not decide a query the path depends on.
  Abandoned,
};

struct Location {
  std::uint32_t function = 0;
  std::string instruction;
};

template <class V>
struct Outcome {
  OutcomeKind kind = OutcomeKind::Returned;
  TrapKind trap = TrapKind::Unreachable;
  std::vector<V> values;  // Returned
  V condition{};          // AssertFailed
  std::string reason;     // Abandoned
  Location where;

  static Outcome returned(std::vector<V> vs) {
    Outcome o;
    o.values = std::move(vs);
    return o;
  }
  static Outcome trapped(TrapKind k, Location at) {
    Outcome o;
    o.kind = OutcomeKind::Trapped;
    o.trap = k;
    o.where = std::move(at);
    return o;
  }
  static Outcome assert_failed(V c, Location at) {
    Outcome o;
    o.kind = OutcomeKind::AssertFailed;
    o.condition = std::move(c);
    o.where = std::move(at);
    return o;
  }
  static Outcome assumption_failed(Location at) {
    Outcome o;
    o.kind = OutcomeKind::AssumptionFailed;
    o.where = std::move(at);
    return o;
  }
  static Outcome abandoned(std::string why) {
    Outcome o;
    o.kind = OutcomeKind::Abandoned;
    o.reason = std::move(why);
    return o;
  }

  /// Traps other than fuel exhaustion, and assertion failures.
  bool is_problem() const {
    return (kind == OutcomeKind::Trapped && trap != TrapKind::FuelExhausted) || kind == OutcomeKind::AssertFailed;
  }
};

}  // namespace wasym::interp
