#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wasym/values/expr.hpp"
#include "wasym/values/path_condition.hpp"

namespace wasym::solver {

namespace detail {

inline std::string bv_literal(unsigned width, std::uint64_t bits) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out = "#x";
  for (int d = static_cast<int>(width / 4) - 1; d >= 0; --d) out += kHex[(bits >> (4 * d)) & 0xF];
  return out;
}

inline const char* smt_relop(wat::RelOp op) {
  switch (op) {
    case wat::RelOp::Eq: return "=";
    case wat::RelOp::Ne: return "distinct";
    case wat::RelOp::LtS: return "bvslt";
    case wat::RelOp::LtU: return "bvult";
    case wat::RelOp::GtS: return "bvsgt";
    case wat::RelOp::GtU: return "bvugt";
    case wat::RelOp::LeS: return "bvsle";
    case wat::RelOp::LeU: return "bvule";
    case wat::RelOp::GeS: return "bvsge";
    case wat::RelOp::GeU: return "bvuge";
  }
  return "=";
}

inline const char* smt_binop(wat::BinOp op) {
  switch (op) {
    case wat::BinOp::Add: return "bvadd";
    case wat::BinOp::Sub: return "bvsub";
    case wat::BinOp::Mul: return "bvmul";
    case wat::BinOp::DivS: return "bvsdiv";
    case wat::BinOp::DivU: return "bvudiv";
    case wat::BinOp::RemS: return "bvsrem";
    case wat::BinOp::RemU: return "bvurem";
    case wat::BinOp::And: return "bvand";
    case wat::BinOp::Or: return "bvor";
    case wat::BinOp::Xor: return "bvxor";
    case wat::BinOp::Shl: return "bvshl";
    case wat::BinOp::ShrS: return "bvashr";
    case wat::BinOp::ShrU: return "bvlshr";
  }
  return "bvadd";
}

}  // namespace detail

/// Translates conjuncts to QF_BV commands. Subterms that are shared, or that would
/// nest too deeply, become `define-fun` constants; names and symbol declarations
/// are scoped so they can follow solver push/pop levels.
class SmtEncoder {
 public:
  static constexpr unsigned kMaxInlineDepth = 24;

  static std::string symbol_name(std::uint64_t id) { return "s" + std::to_string(id); }

  /// Commands that declare what `conjunct` needs and assert it, in the current scope.
  std::string encode_assert(const sym::ExprPtr& conjunct) {
    std::string out;
    const std::string body = boolean(conjunct, out);
    out += "(assert " + body + ")\n";
    return out;
  }

  void push_scope() { scopes_.emplace_back(); }

  void pop_scope() {
    if (scopes_.size() <= 1) return;
    for (const auto* e : scopes_.back().defs) names_.erase(e);
    for (auto id : scopes_.back().symbols) declared_.erase(id);
    scopes_.pop_back();
  }

  void clear() {
    scopes_.assign(1, Scope{});
    names_.clear();
    declared_.clear();
  }

  std::size_t depth() const { return scopes_.size() - 1; }

 private:
  struct Scope {
    std::vector<const sym::Expr*> defs;
    std::vector<std::uint64_t> symbols;
  };

  static bool boolean_kind(const sym::Expr& e) {
    return e.kind == sym::Kind::Relop || e.kind == sym::Kind::Eqz || e.kind == sym::Kind::Not;
  }

  std::string as_bool(const sym::Expr& e, const std::vector<std::string>& args) {
    switch (e.kind) {
      case sym::Kind::Relop:
        return std::string("(") + detail::smt_relop(e.relop) + ' ' + args[0] + ' ' + args[1] + ')';
      case sym::Kind::Eqz:
      case sym::Kind::Not: return "(= " + args[0] + ' ' + detail::bv_literal(e.a->width, 0) + ')';
      default: return "";
    }
  }

  std::string as_bv(const sym::Expr& e, const std::vector<std::string>& args) {
    using sym::Kind;
    const std::string one = detail::bv_literal(32, 1);
    const std::string zero = detail::bv_literal(32, 0);
    switch (e.kind) {
      case Kind::Const: return detail::bv_literal(e.width, e.value);
      case Kind::Symbol: return symbol_name(e.value);
      case Kind::Binop: {
        std::string rhs = args[1];
        if (e.binop == wat::BinOp::Shl || e.binop == wat::BinOp::ShrS || e.binop == wat::BinOp::ShrU)
          rhs = "(bvand " + rhs + ' ' + detail::bv_literal(e.width, e.width - 1) + ')';
        return std::string("(") + detail::smt_binop(e.binop) + ' ' + args[0] + ' ' + rhs + ')';
      }
      case Kind::Relop:
      case Kind::Eqz:
      case Kind::Not: return "(ite " + as_bool(e, args) + ' ' + one + ' ' + zero + ')';
      case Kind::Extract:
        return "((_ extract " + std::to_string(8 * e.hi + 7) + ' ' + std::to_string(8 * e.lo) + ") " + args[0] + ')';
      case Kind::Concat: return "(concat " + args[0] + ' ' + args[1] + ')';
      case Kind::Extend:
        return std::string("((_ ") + (e.sign ? "sign_extend " : "zero_extend ") +
               std::to_string(e.width - e.a->width) + ") " + args[0] + ')';
    }
    return "";
  }

  std::string boolean(const sym::ExprPtr& c, std::string& out) {
    if (boolean_kind(*c)) {
      std::vector<std::string> args;
      if (c->a) args.push_back(bitvector(c->a, out));
      if (c->b) args.push_back(bitvector(c->b, out));
      return as_bool(*c, args);
    }
    return "(distinct " + bitvector(c, out) + ' ' + detail::bv_literal(c->width, 0) + ')';
  }

  // Iterative post-order so that long dependency chains cannot overflow the stack.
  std::string bitvector(const sym::ExprPtr& root, std::string& out) {
    std::unordered_map<const sym::Expr*, unsigned> parents;
    {
      std::vector<const sym::Expr*> stack{root.get()};
      std::unordered_map<const sym::Expr*, bool> seen;
      while (!stack.empty()) {
        const auto* e = stack.back();
        stack.pop_back();
        if (seen[e]) continue;
        seen[e] = true;
        if (names_.count(e)) continue;
        for (const auto* k : {e->a.get(), e->b.get()}) {
          if (!k) continue;
          ++parents[k];
          stack.push_back(k);
        }
      }
    }
    struct Done {
      std::string text;
      unsigned depth;
    };
    std::unordered_map<const sym::Expr*, Done> done;
    std::vector<std::pair<const sym::ExprPtr*, bool>> work{{&root, false}};
    while (!work.empty()) {
      auto [ptr, expanded] = work.back();
      work.pop_back();
      const sym::Expr* e = ptr->get();
      if (done.count(e)) continue;
      if (auto it = names_.find(e); it != names_.end()) {
        done.emplace(e, Done{it->second.second, 0});
        continue;
      }
      if (!expanded) {
        work.emplace_back(ptr, true);
        if (e->b) work.emplace_back(&e->b, false);
        if (e->a) work.emplace_back(&e->a, false);
        continue;
      }
      std::vector<std::string> args;
      unsigned depth = 0;
      for (const auto* k : {e->a.get(), e->b.get()}) {
        if (!k) continue;
        const Done& d = done.at(k);
        args.push_back(d.text);
        depth = std::max(depth, d.depth + 1);
      }
      if (e->kind == sym::Kind::Symbol) declare(*e, out);
      std::string text = as_bv(*e, args);
      const bool leaf = e->kind == sym::Kind::Const || e->kind == sym::Kind::Symbol;
      if (!leaf && e != root.get() && (parents[e] > 1 || depth >= kMaxInlineDepth)) {
        text = define(*ptr, text, out);
        depth = 0;
      }
      done.emplace(e, Done{std::move(text), depth});
    }
    return done.at(root.get()).text;
  }

  void declare(const sym::Expr& e, std::string& out) {
    if (declared_.count(e.value)) return;
    declared_.emplace(e.value, e.width);
    scopes_.back().symbols.push_back(e.value);
    out += "(declare-const " + symbol_name(e.value) + " (_ BitVec " + std::to_string(e.width) + "))\n";
  }

  std::string define(const sym::ExprPtr& e, const std::string& text, std::string& out) {
    std::string name = "t" + std::to_string(next_name_++);
    out += "(define-fun " + name + " () (_ BitVec " + std::to_string(e->width) + ") " + text + ")\n";
    // The entry owns the node so its address cannot be reused while the name is live.
    names_.emplace(e.get(), std::pair{e, name});
    scopes_.back().defs.push_back(e.get());
    return name;
  }

  std::vector<Scope> scopes_{1};
  std::unordered_map<const sym::Expr*, std::pair<sym::ExprPtr, std::string>> names_;
  std::unordered_map<std::uint64_t, unsigned> declared_;
  std::uint64_t next_name_ = 0;
};

/// A complete standalone script for the conjunction of `conjuncts`.
inline std::string render_smtlib(const std::vector<sym::ExprPtr>& conjuncts) {
  SmtEncoder enc;
  std::string out = "(set-logic QF_BV)\n";
  for (const auto& c : conjuncts) out += enc.encode_assert(c);
  out += "(check-sat)\n(get-model)\n";
  return out;
}

inline std::string render_smtlib(const sym::PathCondition& pc) { return render_smtlib(pc.conjuncts()); }

}  // namespace wasym::solver
