#pragma once

#include <cassert>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "wasym/wat/ast.hpp"

namespace wasym::sym {

using wat::BinOp;
using wat::RelOp;

enum class Kind : std::uint8_t { Const, Symbol, Binop, Relop, Eqz, Not, Extract, Concat, Extend };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable bitvector expression node. Relop/Eqz/Not produce width-32 values 0 or 1.
struct Expr {
  Kind kind = Kind::Const;
  std::uint8_t width = 32;
  BinOp binop = BinOp::Add;
  RelOp relop = RelOp::Eq;
  bool sign = false;        // Extend: sign- (true) or zero-extension
  std::uint8_t hi = 0;      // Extract: byte range, inclusive
  std::uint8_t lo = 0;
  std::uint64_t value = 0;  // Const bits or Symbol id
  ExprPtr a;
  ExprPtr b;
  std::size_t hash = 0;
};

inline constexpr std::uint64_t mask(unsigned width) { return width >= 64 ? ~0ULL : (1ULL << width) - 1; }

inline std::int64_t to_signed(std::uint64_t bits, unsigned width) {
  if (width >= 64) return static_cast<std::int64_t>(bits);
  const std::uint64_t m = 1ULL << (width - 1);
  bits &= mask(width);
  return static_cast<std::int64_t>((bits ^ m) - m);
}

namespace detail {

inline std::size_t mix(std::size_t h, std::size_t v) { return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)); }

inline ExprPtr finish(Expr e) {
  std::size_t h = mix(static_cast<std::size_t>(e.kind), e.width);
  h = mix(h, static_cast<std::size_t>(e.binop) * 31 + static_cast<std::size_t>(e.relop));
  h = mix(h, (static_cast<std::size_t>(e.sign) << 16) | (std::size_t{e.hi} << 8) | e.lo);
  h = mix(h, std::hash<std::uint64_t>{}(e.value));
  if (e.a) h = mix(h, e.a->hash);
  if (e.b) h = mix(h, e.b->hash);
  e.hash = h;
  return std::make_shared<const Expr>(std::move(e));
}

}  // namespace detail

/// Structural equality (pointer-equal subtrees short-circuit).
inline bool equal(const ExprPtr& x, const ExprPtr& y) {
  if (x == y) return true;
  if (!x || !y) return false;
  if (x->hash != y->hash || x->kind != y->kind || x->width != y->width || x->value != y->value ||
      x->binop != y->binop || x->relop != y->relop || x->sign != y->sign || x->hi != y->hi || x->lo != y->lo)
    return false;
  return equal(x->a, y->a) && equal(x->b, y->b);
}

inline std::optional<std::uint64_t> const_value(const ExprPtr& e) {
  if (e && e->kind == Kind::Const) return e->value;
  return std::nullopt;
}

/// True when the expression can only evaluate to 0 or 1.
inline bool is_boolean(const ExprPtr& e) {
  switch (e->kind) {
    case Kind::Relop:
    case Kind::Eqz:
    case Kind::Not: return true;
    case Kind::Const: return e->width == 32 && e->value <= 1;
    default: return false;
  }
}

/// Total semantics of a binary operator on `width`-bit operands. Division by zero and
/// signed overflow follow SMT-LIB (bvudiv/bvsdiv/bvurem/bvsrem); shift counts are taken
/// modulo the width, as in Wasm.
inline std::uint64_t apply_binop(BinOp op, unsigned width, std::uint64_t a, std::uint64_t b) {
  const std::uint64_t m = mask(width);
  a &= m;
  b &= m;
  const std::int64_t sa = to_signed(a, width);
  const std::int64_t sb = to_signed(b, width);
  auto udiv = [&](std::uint64_t x, std::uint64_t y) { return y == 0 ? m : x / y; };
  auto urem = [&](std::uint64_t x, std::uint64_t y) { return y == 0 ? x : x % y; };
  auto neg = [&](std::uint64_t x) { return (0 - x) & m; };
  switch (op) {
    case BinOp::Add: return (a + b) & m;
    case BinOp::Sub: return (a - b) & m;
    case BinOp::Mul: return (a * b) & m;
    case BinOp::DivU: return udiv(a, b);
    case BinOp::RemU: return urem(a, b);
    case BinOp::DivS: {
      const bool na = sa < 0;
      const bool nb = sb < 0;
      const std::uint64_t q = udiv(na ? neg(a) : a, nb ? neg(b) : b);
      return (na != nb) ? neg(q) : q;
    }
    case BinOp::RemS: {
      const bool na = sa < 0;
      const bool nb = sb < 0;
      const std::uint64_t r = urem(na ? neg(a) : a, nb ? neg(b) : b);
      return na ? neg(r) : r;
    }
    case BinOp::And: return a & b;
    case BinOp::Or: return a | b;
    case BinOp::Xor: return a ^ b;
    case BinOp::Shl: return (a << (b % width)) & m;
    case BinOp::ShrU: return a >> (b % width);
    case BinOp::ShrS: return static_cast<std::uint64_t>(sa >> (b % width)) & m;
  }
  return 0;
}

inline bool apply_relop(RelOp op, unsigned width, std::uint64_t a, std::uint64_t b) {
  a &= mask(width);
  b &= mask(width);
  const std::int64_t sa = to_signed(a, width);
  const std::int64_t sb = to_signed(b, width);
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

inline constexpr RelOp complement(RelOp op) {
  switch (op) {
    case RelOp::Eq: return RelOp::Ne;
    case RelOp::Ne: return RelOp::Eq;
    case RelOp::LtS: return RelOp::GeS;
    case RelOp::LtU: return RelOp::GeU;
    case RelOp::GtS: return RelOp::LeS;
    case RelOp::GtU: return RelOp::LeU;
    case RelOp::LeS: return RelOp::GtS;
    case RelOp::LeU: return RelOp::GtU;
    case RelOp::GeS: return RelOp::LtS;
    case RelOp::GeU: return RelOp::LtU;
  }
  return op;
}

/// Node constructors that perform no simplification.
namespace raw {

inline ExprPtr constant(unsigned width, std::uint64_t bits) {
  Expr e;
  e.kind = Kind::Const;
  e.width = static_cast<std::uint8_t>(width);
  e.value = bits & mask(width);
  return detail::finish(std::move(e));
}

inline ExprPtr symbol(std::uint32_t id, unsigned width) {
  Expr e;
  e.kind = Kind::Symbol;
  e.width = static_cast<std::uint8_t>(width);
  e.value = id;
  return detail::finish(std::move(e));
}

inline ExprPtr binop(BinOp op, ExprPtr x, ExprPtr y) {
  assert(x->width == y->width);
  Expr e;
  e.kind = Kind::Binop;
  e.width = x->width;
  e.binop = op;
  e.a = std::move(x);
  e.b = std::move(y);
  return detail::finish(std::move(e));
}

inline ExprPtr relop(RelOp op, ExprPtr x, ExprPtr y) {
  assert(x->width == y->width);
  Expr e;
  e.kind = Kind::Relop;
  e.width = 32;
  e.relop = op;
  e.a = std::move(x);
  e.b = std::move(y);
  return detail::finish(std::move(e));
}

inline ExprPtr unary(Kind k, ExprPtr x) {
  Expr e;
  e.kind = k;
  e.width = 32;
  e.a = std::move(x);
  return detail::finish(std::move(e));
}

inline ExprPtr eqz(ExprPtr x) { return unary(Kind::Eqz, std::move(x)); }
inline ExprPtr lnot(ExprPtr x) { return unary(Kind::Not, std::move(x)); }

inline ExprPtr extract(ExprPtr x, unsigned hi, unsigned lo) {
  assert(hi >= lo && (hi + 1) * 8 <= x->width);
  Expr e;
  e.kind = Kind::Extract;
  e.width = static_cast<std::uint8_t>(8 * (hi - lo + 1));
  e.hi = static_cast<std::uint8_t>(hi);
  e.lo = static_cast<std::uint8_t>(lo);
  e.a = std::move(x);
  return detail::finish(std::move(e));
}

inline ExprPtr concat(ExprPtr x, ExprPtr y) {
  assert(x->width + y->width <= 64);
  Expr e;
  e.kind = Kind::Concat;
  e.width = static_cast<std::uint8_t>(x->width + y->width);
  e.a = std::move(x);
  e.b = std::move(y);
  return detail::finish(std::move(e));
}

inline ExprPtr extend(ExprPtr x, unsigned to_width, bool sign) {
  assert(to_width > x->width);
  Expr e;
  e.kind = Kind::Extend;
  e.width = static_cast<std::uint8_t>(to_width);
  e.sign = sign;
  e.a = std::move(x);
  return detail::finish(std::move(e));
}

}  // namespace raw

inline ExprPtr constant(unsigned width, std::uint64_t bits) { return raw::constant(width, bits); }
inline ExprPtr symbol(std::uint32_t id, unsigned width) { return raw::symbol(id, width); }

inline ExprPtr binop(BinOp op, ExprPtr x, ExprPtr y) {
  const unsigned w = x->width;
  const auto cx = const_value(x);
  const auto cy = const_value(y);
  // Trapping divisions never get here from the interpreter, which forks on the trap
  // condition first; the total SMT-LIB value keeps constant trees fully folded.
  if (cx && cy) return constant(w, apply_binop(op, w, *cx, *cy));
  switch (op) {
    case BinOp::Add:
      if (cy == 0ULL) return x;
      if (cx == 0ULL) return y;
      break;
    case BinOp::Sub:
      if (cy == 0ULL) return x;
      break;
    case BinOp::Mul:
      if (cy == 1ULL) return x;
      if (cx == 1ULL) return y;
      if (cy == 0ULL || cx == 0ULL) return constant(w, 0);
      break;
    case BinOp::Xor:
      if (equal(x, y)) return constant(w, 0);
      break;
    case BinOp::And:
      if (equal(x, y)) return x;
      break;
    default: break;
  }
  return raw::binop(op, std::move(x), std::move(y));
}

inline ExprPtr relop(RelOp op, ExprPtr x, ExprPtr y) {
  const auto cx = const_value(x);
  const auto cy = const_value(y);
  if (cx && cy) return constant(32, apply_relop(op, x->width, *cx, *cy) ? 1 : 0);
  return raw::relop(op, std::move(x), std::move(y));
}

inline ExprPtr eqz(ExprPtr x) {
  if (auto c = const_value(x)) return constant(32, *c == 0 ? 1 : 0);
  return raw::eqz(std::move(x));
}

/// Logical negation of a value in boolean position: 1 if x is zero, else 0.
inline ExprPtr lnot(ExprPtr x) {
  if (auto c = const_value(x)) return constant(32, *c == 0 ? 1 : 0);
  if (x->kind == Kind::Relop) return raw::relop(complement(x->relop), x->a, x->b);
  if (x->kind == Kind::Not && is_boolean(x->a)) return x->a;
  return raw::lnot(std::move(x));
}

inline ExprPtr extract(ExprPtr x, unsigned hi, unsigned lo) {
  if (lo == 0 && (hi + 1) * 8 == x->width) return x;
  if (auto c = const_value(x)) return constant(8 * (hi - lo + 1), *c >> (8 * lo));
  if (x->kind == Kind::Extract) return extract(x->a, x->lo + hi, x->lo + lo);
  if (x->kind == Kind::Concat) {
    const unsigned low_bytes = x->b->width / 8u;
    if (hi < low_bytes) return extract(x->b, hi, lo);
    if (lo >= low_bytes) return extract(x->a, hi - low_bytes, lo - low_bytes);
  }
  return raw::extract(std::move(x), hi, lo);
}

/// `x` supplies the high bits, `y` the low bits.
inline ExprPtr concat(ExprPtr x, ExprPtr y) {
  const auto cx = const_value(x);
  const auto cy = const_value(y);
  if (cx && cy) return constant(x->width + y->width, (*cx << y->width) | *cy);
  if (x->kind == Kind::Extract && y->kind == Kind::Extract && x->lo == y->hi + 1 && equal(x->a, y->a))
    return extract(x->a, x->hi, y->lo);
  return raw::concat(std::move(x), std::move(y));
}

inline ExprPtr extend(ExprPtr x, unsigned to_width, bool sign) {
  if (auto c = const_value(x)) {
    const std::uint64_t bits = sign ? static_cast<std::uint64_t>(to_signed(*c, x->width)) : *c;
    return constant(to_width, bits);
  }
  return raw::extend(std::move(x), to_width, sign);
}

/// Flattened evaluation program for an expression DAG; shared nodes are computed once.
class Evaluator {
 public:
  explicit Evaluator(const ExprPtr& root) { root_ = compile(root); }
  Evaluator(const std::vector<ExprPtr>& roots) {
    for (const auto& r : roots) roots_.push_back(compile(r));
  }

  /// Symbol ids referenced, each with its width.
  const std::vector<std::pair<std::uint32_t, unsigned>>& symbols() const { return symbols_; }

  template <class Lookup>
  std::uint64_t run(Lookup&& lookup) {
    exec(lookup);
    return regs_[root_];
  }

  /// Evaluates all roots; true when every one is nonzero.
  template <class Lookup>
  bool all_true(Lookup&& lookup) {
    exec(lookup);
    for (auto r : roots_) {
      if (regs_[r] == 0) return false;
    }
    return true;
  }

 private:
  struct Op {
    const Expr* node;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
  };

  // Post-order flattening with an explicit stack so deep chains do not exhaust the call stack.
  std::uint32_t compile(const ExprPtr& root) {
    std::vector<std::pair<const Expr*, bool>> work{{root.get(), false}};
    while (!work.empty()) {
      auto [e, expanded] = work.back();
      work.pop_back();
      if (index_.count(e)) continue;
      if (!expanded) {
        work.emplace_back(e, true);
        if (e->b && !index_.count(e->b.get())) work.emplace_back(e->b.get(), false);
        if (e->a && !index_.count(e->a.get())) work.emplace_back(e->a.get(), false);
        continue;
      }
      Op op{e};
      if (e->a) op.a = index_.at(e->a.get());
      if (e->b) op.b = index_.at(e->b.get());
      if (e->kind == Kind::Symbol) {
        bool seen = false;
        for (const auto& s : symbols_) seen |= s.first == e->value;
        if (!seen) symbols_.emplace_back(static_cast<std::uint32_t>(e->value), e->width);
      }
      const auto idx = static_cast<std::uint32_t>(program_.size());
      program_.push_back(op);
      regs_.push_back(0);
      index_.emplace(e, idx);
    }
    return index_.at(root.get());
  }

  template <class Lookup>
  void exec(Lookup& lookup) {
    for (std::size_t i = 0; i < program_.size(); ++i) {
      const Op& op = program_[i];
      const Expr& n = *op.node;
      std::uint64_t r = 0;
      switch (n.kind) {
        case Kind::Const: r = n.value; break;
        case Kind::Symbol: r = lookup(static_cast<std::uint32_t>(n.value)) & mask(n.width); break;
        case Kind::Binop: r = apply_binop(n.binop, n.width, regs_[op.a], regs_[op.b]); break;
        case Kind::Relop: r = apply_relop(n.relop, n.a->width, regs_[op.a], regs_[op.b]) ? 1 : 0; break;
        case Kind::Eqz:
        case Kind::Not: r = regs_[op.a] == 0 ? 1 : 0; break;
        case Kind::Extract: r = (regs_[op.a] >> (8 * n.lo)) & mask(n.width); break;
        case Kind::Concat: r = ((regs_[op.a] << n.b->width) | regs_[op.b]) & mask(n.width); break;
        case Kind::Extend:
          r = n.sign ? static_cast<std::uint64_t>(to_signed(regs_[op.a], n.a->width)) & mask(n.width)
                     : regs_[op.a];
          break;
      }
      regs_[i] = r;
    }
  }

  std::vector<Op> program_;
  std::vector<std::uint64_t> regs_;
  std::unordered_map<const Expr*, std::uint32_t> index_;
  std::vector<std::pair<std::uint32_t, unsigned>> symbols_;
  std::uint32_t root_ = 0;
  std::vector<std::uint32_t> roots_;
};

template <class Lookup>
std::uint64_t evaluate(const ExprPtr& e, Lookup&& lookup) {
  return Evaluator{e}.run(lookup);
}

namespace detail {

inline std::string width_prefix(unsigned w) { return "i" + std::to_string(w); }

inline void render_to(std::string& out, const Expr& e) {
  switch (e.kind) {
    case Kind::Const:
      out += '(' + width_prefix(e.width) + ' ' + std::to_string(to_signed(e.value, e.width)) + ')';
      return;
    case Kind::Symbol: out += "symbol_" + std::to_string(e.value); return;
    case Kind::Binop: out += '(' + width_prefix(e.width) + '.' + std::string{wat::binop_name(e.binop)} + ' '; break;
    case Kind::Relop:
      if (e.relop == RelOp::Eq || e.relop == RelOp::Ne) {
        out += std::string{"(bool."} + std::string{wat::relop_name(e.relop)} + ' ';
      } else {
        out += '(' + width_prefix(e.a->width) + '.' + std::string{wat::relop_name(e.relop)} + ' ';
      }
      break;
    case Kind::Eqz: out += '(' + width_prefix(e.a->width) + ".eqz "; break;
    case Kind::Not: out += "(bool.not "; break;
    case Kind::Extract:
      if (e.a->width == 64 && e.lo == 0 && e.hi == 3) {
        out += "(i32.wrap_i64 ";
      } else {
        out += "(extract ";
        render_to(out, *e.a);
        out += ' ' + std::to_string(e.hi) + ' ' + std::to_string(e.lo) + ')';
        return;
      }
      break;
    case Kind::Concat: out += "(concat "; break;
    case Kind::Extend:
      out += '(' + width_prefix(e.width) + ".extend_" + width_prefix(e.a->width) + (e.sign ? "_s " : "_u ");
      break;
  }
  render_to(out, *e.a);
  if (e.b) {
    out += ' ';
    render_to(out, *e.b);
  }
  out += ')';
}

}  // namespace detail

/// S-expression rendering used in reports, e.g. `(i32.add (i32 42) symbol_0)`.
inline std::string render(const ExprPtr& e) {
  std::string out;
  detail::render_to(out, *e);
  return out;
}

}  // namespace wasym::sym
