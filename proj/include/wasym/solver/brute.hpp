#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "wasym/solver/model.hpp"
#include "wasym/values/expr.hpp"

namespace wasym::solver {

inline constexpr unsigned kDefaultBruteForceBits = 24;

/// Exhaustive search over every assignment of the symbols in `conjuncts`.
/// Returns Unknown when the total domain exceeds 2^max_bits.
inline SatResult brute_check(const std::vector<sym::ExprPtr>& conjuncts, unsigned max_bits = kDefaultBruteForceBits) {
  sym::Evaluator ev(conjuncts);
  const auto& syms = ev.symbols();
  unsigned total = 0;
  for (const auto& [id, w] : syms) total += w;
  if (total > max_bits) return Unknown{"domain of " + std::to_string(total) + " bits exceeds the brute-force cap"};

  std::uint32_t max_id = 0;
  for (const auto& s : syms) max_id = std::max(max_id, s.first);
  std::vector<std::uint64_t> by_id(max_id + 1, 0);
  const auto lookup = [&](std::uint32_t id) { return by_id[id]; };

  for (;;) {
    if (ev.all_true(lookup)) {
      Model m;
      for (const auto& [id, w] : syms) m[id] = Assignment{w, by_id[id]};
      return Sat{std::move(m)};
    }
    // Odometer increment over the symbol list.
    std::size_t i = 0;
    for (; i < syms.size(); ++i) {
      const unsigned w = syms[i].second;
      by_id[syms[i].first] = (by_id[syms[i].first] + 1) & sym::mask(w);
      if (by_id[syms[i].first] != 0) break;
    }
    if (i == syms.size()) return Unsat{};
  }
}

}  // namespace wasym::solver
