#include <gtest/gtest.h>

#include <random>

#include "wasym/solver/solver.hpp"

using namespace wasym;
using namespace wasym::solver;
using wat::BinOp;
using wat::RelOp;

namespace {

constexpr const char* kZ3 = "z3 -in";

bool have_z3() { return command_available(kZ3); }

sym::PathCondition pc_of(const std::vector<sym::ExprPtr>& cs) {
  sym::PathCondition pc;
  for (const auto& c : cs) pc = pc.with(c);
  return pc;
}

// Random QF_BV formulas over up to three 8-bit symbols.
class FormulaGen {
 public:
  explicit FormulaGen(std::uint32_t seed) : rng_(seed) {}

  std::vector<sym::ExprPtr> formula(unsigned symbols) {
    symbols_ = symbols;
    std::vector<sym::ExprPtr> out;
    const unsigned n = 1 + pick(3);
    for (unsigned i = 0; i < n; ++i) out.push_back(conjunct());
    return out;
  }

  sym::ExprPtr conjunct() {
    switch (pick(5)) {
      case 0: return sym::lnot(conjunct_leaf());
      case 1: return sym::binop(BinOp::And, conjunct_leaf(), conjunct_leaf());
      case 2: return sym::extend(term(2), 32, pick(2));  // truthiness of a plain value
      default: return conjunct_leaf();
    }
  }

 private:
  unsigned pick(unsigned n) { return std::uniform_int_distribution<unsigned>(0, n - 1)(rng_); }

  sym::ExprPtr conjunct_leaf() {
    static constexpr RelOp ops[] = {RelOp::Eq,  RelOp::Ne,  RelOp::LtS, RelOp::LtU, RelOp::GtS,
                                    RelOp::GtU, RelOp::LeS, RelOp::LeU, RelOp::GeS, RelOp::GeU};
    if (pick(6) == 0) return sym::eqz(term(2));
    return sym::relop(ops[pick(10)], term(2), term(2));
  }

  sym::ExprPtr term(int depth) {
    if (depth == 0 || pick(3) == 0) {
      if (pick(3) != 0) return sym::symbol(pick(symbols_), 8);
      return sym::constant(8, pick(256));
    }
    static constexpr BinOp ops[] = {BinOp::Add,  BinOp::Sub,  BinOp::Mul, BinOp::DivS, BinOp::DivU,
                                    BinOp::RemS, BinOp::RemU, BinOp::And, BinOp::Or,   BinOp::Xor,
                                    BinOp::Shl,  BinOp::ShrS, BinOp::ShrU};
    if (pick(8) == 0) return sym::extract(sym::concat(term(depth - 1), term(depth - 1)), 1, 1);
    return sym::binop(ops[pick(13)], term(depth - 1), term(depth - 1));
  }

  std::mt19937 rng_;
  unsigned symbols_ = 1;
};

const char* verdict(const SatResult& r) { return is_sat(r) ? "sat" : is_unsat(r) ? "unsat" : "unknown"; }

class LyingSession final : public Session {
 public:
  std::string name() const override { return "liar"; }

 protected:
  SatResult raw_check(const sym::PathCondition&) override { return Sat{Model{{0, Assignment{8, 3}}}}; }
};

}  // namespace

TEST(SmtLib, SignedComparisonMapping) {
  auto s0 = sym::symbol(0, 32), s1 = sym::symbol(1, 32);
  const std::string text = render_smtlib({sym::relop(RelOp::GtS, s0, s1)});
  EXPECT_NE(text.find("(set-logic QF_BV)"), std::string::npos);
  EXPECT_NE(text.find("(declare-const s0 (_ BitVec 32))"), std::string::npos);
  EXPECT_NE(text.find("(declare-const s1 (_ BitVec 32))"), std::string::npos);
  EXPECT_NE(text.find("(assert (bvsgt s0 s1))"), std::string::npos) << text;
  EXPECT_NE(text.find("(check-sat)"), std::string::npos);
  EXPECT_NE(text.find("(get-model)"), std::string::npos);
}

TEST(SmtLib, OperatorFamilies) {
  auto s0 = sym::symbol(0, 32), s1 = sym::symbol(1, 32);
  const std::string text = render_smtlib({
      sym::relop(RelOp::LtU, sym::binop(BinOp::DivU, s0, s1), sym::binop(BinOp::RemS, s0, s1)),
      sym::binop(BinOp::DivS, s0, s1),
  });
  EXPECT_NE(text.find("bvult"), std::string::npos);
  EXPECT_NE(text.find("bvudiv"), std::string::npos);
  EXPECT_NE(text.find("bvsrem"), std::string::npos);
  EXPECT_NE(text.find("(distinct (bvsdiv s0 s1) #x00000000)"), std::string::npos) << text;
}

TEST(SmtLib, EmptyConditionHasNoAsserts) {
  const std::string text = render_smtlib(std::vector<sym::ExprPtr>{});
  EXPECT_EQ(text.find("assert"), std::string::npos);
  EXPECT_NE(text.find("(check-sat)"), std::string::npos);
}

TEST(BruteForce, Examples) {
  auto s0 = sym::symbol(0, 8);
  auto r = brute_check({sym::relop(RelOp::Eq, sym::binop(BinOp::Mul, s0, s0), sym::constant(8, 1))});
  ASSERT_TRUE(is_sat(r));
  EXPECT_EQ(std::get<Sat>(r).model.at(0).bits % 2, 1u);
  EXPECT_TRUE(is_unsat(brute_check({sym::relop(RelOp::Ne, s0, s0)})));
  EXPECT_TRUE(is_unsat(brute_check({sym::relop(RelOp::GtS, s0, sym::constant(8, 0)),
                                    sym::relop(RelOp::LtS, s0, sym::constant(8, 0))})));
  auto empty = brute_check({});
  ASSERT_TRUE(is_sat(empty));
  EXPECT_TRUE(std::get<Sat>(empty).model.empty());
}

TEST(BruteForce, DomainCap) {
  std::vector<sym::ExprPtr> three, four;
  for (std::uint32_t i = 0; i < 4; ++i) {
    auto c = sym::relop(RelOp::Eq, sym::symbol(i, 8), sym::constant(8, 200 + i));
    if (i < 3) three.push_back(c);
    four.push_back(c);
  }
  auto r3 = brute_check(three);
  ASSERT_TRUE(is_sat(r3));
  EXPECT_EQ(std::get<Sat>(r3).model.at(2).bits, 202u);
  EXPECT_TRUE(is_unknown(brute_check(four)));
  EXPECT_TRUE(is_unknown(brute_check({sym::relop(RelOp::Eq, sym::symbol(0, 32), sym::constant(32, 1))})));
}

TEST(Session, ModelsAreCompletedAndValidated) {
  BruteForceSession s;
  auto s0 = sym::symbol(0, 8), s1 = sym::symbol(1, 8);
  // s1 only appears in a conjunct that any value satisfies
  auto r = s.check(pc_of({sym::relop(RelOp::GtU, s0, sym::constant(8, 250)),
                          sym::relop(RelOp::Eq, sym::binop(BinOp::Xor, s1, s1), sym::constant(8, 0))}));
  ASSERT_TRUE(is_sat(r));
  const Model& m = std::get<Sat>(r).model;
  EXPECT_GT(m.at(0).bits, 250u);
  EXPECT_EQ(m.count(1), 0u);  // folded away: x xor x is 0
  EXPECT_EQ(s.queries(), 1u);
}

TEST(Session, InvalidModelIsRejected) {
  LyingSession liar;
  auto c = sym::relop(RelOp::Eq, sym::symbol(0, 8), sym::constant(8, 4));
  EXPECT_THROW(liar.check(pc_of({c})), SolverError);
}

TEST(Model, ReferenceBlockVerbatim) {
  Model m{{0, Assignment{32, 2147483646u}}, {1, Assignment{32, static_cast<std::uint32_t>(-2147483647)}}};
  EXPECT_EQ(render_model(m),
            "Model:\n"
            "  (model\n"
            "    (symbol_0 (i32 2147483646))\n"
            "    (symbol_1 (i32 -2147483647)))\n");
  EXPECT_EQ(render_model({}), "Model:\n  (model)\n");
  EXPECT_EQ(render_model({{0, Assignment{64, ~0ull}}}), "Model:\n  (model\n    (symbol_0 (i64 -1)))\n");
}

TEST(Model, ParseRoundTrip) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    Model m;
    const int n = static_cast<int>(rng() % 5);
    for (int k = 0; k < n; ++k) {
      const unsigned w = rng() % 2 ? 32 : 64;
      m[static_cast<std::uint32_t>(rng() % 10)] = Assignment{w, rng() & sym::mask(w)};
    }
    EXPECT_EQ(parse_model(render_model(m)), m);
  }
  EXPECT_EQ(parse_model("(model (symbol_0 (i32 4294967295)))").at(0).bits, 0xFFFFFFFFu);
}

TEST(Model, ParseErrors) {
  EXPECT_THROW(parse_model("(model (symbol_0 (i16 1)))"), ModelFormatError);
  EXPECT_THROW(parse_model("(model (symbol_0 (i32 4294967296)))"), ModelFormatError);
  EXPECT_THROW(parse_model("(model (symbol_0 (i32 1)) (symbol_0 (i32 2)))"), ModelFormatError);
  EXPECT_THROW(parse_model("(model (x (i32 1)))"), ModelFormatError);
  EXPECT_THROW(parse_model("(model"), ModelFormatError);
  EXPECT_THROW(parse_model("(model) junk"), ModelFormatError);
}

TEST(Model, GetModelResponseFormats) {
  const Model m = detail::parse_get_model(R"((
    (define-fun s0 () (_ BitVec 32) #xfffffffe)
    (define-fun s1 () (_ BitVec 8) #b00000101)
    (define-fun s2 () (_ BitVec 64) (_ bv17 64))
    (define-fun t3 () (_ BitVec 8) #x01)))");
  EXPECT_EQ(m.at(0), (Assignment{32, 0xFFFFFFFEu}));
  EXPECT_EQ(m.at(1), (Assignment{8, 5}));
  EXPECT_EQ(m.at(2), (Assignment{64, 17}));
  EXPECT_EQ(m.size(), 3u);
}

TEST(Resolve, FallsBackWithWarning) {
  SolverConfig cfg;
  cfg.command = "definitely-not-a-solver-xyz -in";
  std::string warned;
  auto r = resolve(cfg, [&](const std::string& w) { warned = w; });
  EXPECT_EQ(r.backend, Backend::BruteForce);
  EXPECT_NE(warned.find("definitely-not-a-solver-xyz"), std::string::npos);
  cfg.backend = Backend::External;
  EXPECT_EQ(resolve(cfg).backend, Backend::External);
}

TEST(External, DeadProcessIsUnknown) {
  ExternalSession s("exit 0", 1.0, true);
  auto c = sym::relop(RelOp::Eq, sym::symbol(0, 8), sym::constant(8, 4));
  auto r = s.check(pc_of({c}));
  EXPECT_TRUE(is_unknown(r));
}

TEST(External, SilentProcessTimesOut) {
  ExternalSession s("sleep 30", 0.1, true);
  auto c = sym::relop(RelOp::Eq, sym::symbol(0, 8), sym::constant(8, 4));
  auto r = s.check(pc_of({c}));
  ASSERT_TRUE(is_unknown(r));
  EXPECT_EQ(std::get<Unknown>(r).reason, "solver timeout");
}

TEST(External, Z3Basics) {
  if (!have_z3()) GTEST_SKIP() << "z3 not on PATH";
  ExternalSession s(kZ3, 10, true);
  auto s0 = sym::symbol(0, 32), s1 = sym::symbol(1, 32);
  EXPECT_TRUE(is_sat(s.check(sym::PathCondition{})));
  EXPECT_TRUE(is_unsat(s.check(pc_of({sym::relop(RelOp::GtS, s0, sym::constant(32, 0)),
                                      sym::relop(RelOp::LtS, s0, sym::constant(32, 0))}))));
  // the first-level branch condition of the swap example, then its second branch
  auto x1 = sym::binop(BinOp::Add, s0, s1);
  auto y1 = sym::binop(BinOp::Sub, x1, s1);
  auto x2 = sym::binop(BinOp::Sub, x1, y1);
  auto pc_tt = pc_of({sym::relop(RelOp::GtS, s0, s1),
                      sym::relop(RelOp::GtS, sym::binop(BinOp::Sub, x2, y1), sym::constant(32, 0))});
  auto r = s.check(pc_tt);
  ASSERT_TRUE(is_sat(r));
  EXPECT_TRUE(model_satisfies(std::get<Sat>(r).model, pc_tt.conjuncts()));
}

TEST(External, AgreesWithBruteForce) {
  if (!have_z3()) GTEST_SKIP() << "z3 not on PATH";
  FormulaGen gen(77);
  ExternalSession z3(kZ3, 10, true);
  BruteForceSession brute;
  int sat = 0, unsat = 0;
  for (int i = 0; i < 500; ++i) {
    const unsigned symbols = i % 5 == 0 ? 3 : 1 + i % 2;
    auto pc = pc_of(gen.formula(symbols));
    auto a = z3.check(pc);
    auto b = brute.check(pc);
    ASSERT_EQ(verdict(a), verdict(b)) << render_smtlib(pc);
    if (is_sat(a)) {
      ++sat;
      EXPECT_TRUE(model_satisfies(std::get<Sat>(a).model, pc.conjuncts()));
    } else {
      ++unsat;
    }
  }
  EXPECT_GT(sat, 50);
  EXPECT_GT(unsat, 20);
}

TEST(External, IncrementalIsTransparent) {
  if (!have_z3()) GTEST_SKIP() << "z3 not on PATH";
  FormulaGen gen(5);
  ExternalSession inc(kZ3, 10, true), full(kZ3, 10, false);
  // depth-first walk of a random tree of conditions, as exploration issues them
  std::function<void(const sym::PathCondition&, int)> walk = [&](const sym::PathCondition& pc, int depth) {
    auto a = inc.check(pc);
    auto b = full.check(pc);
    ASSERT_EQ(verdict(a), verdict(b)) << render_smtlib(pc);
    if (depth == 0 || !is_sat(a)) return;
    gen.formula(2);
    auto c = gen.conjunct();
    walk(pc.with(c), depth - 1);
    walk(pc.with(sym::lnot(c)), depth - 1);
  };
  gen.formula(2);
  walk(sym::PathCondition{}, 7);
}

TEST(External, UnsatIsMonotone) {
  if (!have_z3()) GTEST_SKIP() << "z3 not on PATH";
  FormulaGen gen(31);
  ExternalSession z3(kZ3, 10, true);
  int checked = 0;
  for (int i = 0; i < 400 && checked < 40; ++i) {
    auto pc = pc_of(gen.formula(2));
    if (!is_unsat(z3.check(pc))) continue;
    ++checked;
    for (int k = 0; k < 3; ++k) EXPECT_TRUE(is_unsat(z3.check(pc.with(gen.conjunct()))));
  }
  EXPECT_GT(checked, 5);
}

TEST(BruteForce, UnsatIsMonotone) {
  FormulaGen gen(32);
  BruteForceSession s;
  int checked = 0;
  for (int i = 0; i < 400 && checked < 40; ++i) {
    auto pc = pc_of(gen.formula(2));
    if (!is_unsat(s.check(pc))) continue;
    ++checked;
    for (int k = 0; k < 3; ++k) EXPECT_TRUE(is_unsat(s.check(pc.with(gen.conjunct()))));
  }
  EXPECT_GT(checked, 5);
}
