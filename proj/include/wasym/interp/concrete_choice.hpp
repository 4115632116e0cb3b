#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "wasym/interp/outcome.hpp"
#include "wasym/interp/state.hpp"
#include "wasym/interp/values.hpp"
#include "wasym/solver/model.hpp"

namespace wasym::interp {

/// The identity effect: every choice is decided by the value itself, so continuations
/// run inline. Symbols are only available when replaying a model.
class ConcreteChoice {
 public:
  using V = values::ConcreteValue;
  using State = ThreadState<ConcreteValues>;

  /// Empty while the path continues.
  struct Step {
    std::optional<Outcome<V>> outcome;
  };

  explicit ConcreteChoice(const solver::Model* replay = nullptr) : replay_(replay) {}

  Step proceed() const { return {}; }
  bool is_proceed(const Step& s) const { return !s.outcome; }
  Step finish(State&, Outcome<V> o) const { return Step{std::move(o)}; }
  std::optional<Step> tick(State&) const { return std::nullopt; }

  template <class K>
  Step select(State& s, const V& c, K&& k) const {
    return k(s, c.truthy());
  }

  template <class K>
  Step assume(State& s, const V& c, K&& k) const {
    if (!c.truthy()) return finish(s, Outcome<V>::assumption_failed(Location{s.frames.back().function, "call"}));
    return k(s);
  }

  template <class K>
  Step fresh(State& s, wat::ValueType t, K&& k) const {
    const auto id = static_cast<std::uint32_t>(s.symbols.size());
    if (!replay_) throw ConfigError("the program creates symbols; concrete execution needs a model to replay");
    auto it = replay_->find(id);
    if (it == replay_->end()) throw ConfigError("model has no value for symbol_" + std::to_string(id));
    if (it->second.width != wat::bit_width(t))
      throw ConfigError("model gives symbol_" + std::to_string(id) + " width " + std::to_string(it->second.width) +
                        " but the program requests " + std::string(wat::type_name(t)));
    s.symbols.push_back(t);
    return k(s, ConcreteValues::constant(t, it->second.bits));
  }

  template <class K>
  Step concretize(State& s, const V& v, K&& k) const {
    return k(s, v.bits);
  }

 private:
  const solver::Model* replay_;
};

}  // namespace wasym::interp
