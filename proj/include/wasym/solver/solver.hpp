#pragma once

#include <atomic>
#include <cctype>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "wasym/solver/brute.hpp"
#include "wasym/solver/model.hpp"
#include "wasym/solver/process.hpp"
#include "wasym/solver/smtlib.hpp"
#include "wasym/values/path_condition.hpp"

namespace wasym::solver {

/// A backend misbehaved (protocol error or a model that does not satisfy the query).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Backend : std::uint8_t { Auto, External, BruteForce };

struct SolverConfig {
  Backend backend = Backend::Auto;
  std::string command = "z3 -in";
  double timeout_s = 10.0;  // per query; 0 disables
  bool incremental = true;
  unsigned brute_force_bits = kDefaultBruteForceBits;
};

inline std::atomic<std::uint64_t>& total_queries() {
  static std::atomic<std::uint64_t> n{0};
  return n;
}

/// Evaluates every conjunct under `m`, with absent symbols read as 0.
inline bool model_satisfies(const Model& m, const std::vector<sym::ExprPtr>& conjuncts) {
  if (conjuncts.empty()) return true;
  sym::Evaluator ev(conjuncts);
  return ev.all_true([&](std::uint32_t id) {
    auto it = m.find(id);
    return it == m.end() ? 0 : it->second.bits;
  });
}

/// One worker's solver. Sat answers are completed for every symbol of the
/// query and validated against it before they are returned.
class Session {
 public:
  virtual ~Session() = default;

  SatResult check(const sym::PathCondition& pc) {
    ++queries_;
    total_queries().fetch_add(1, std::memory_order_relaxed);
    SatResult r = raw_check(pc);
    if (auto* sat = std::get_if<Sat>(&r)) {
      const auto conjuncts = pc.conjuncts();
      if (!conjuncts.empty()) {
        sym::Evaluator ev(conjuncts);
        for (const auto& [id, w] : ev.symbols()) sat->model.try_emplace(id, Assignment{w, 0});
      }
      if (!model_satisfies(sat->model, conjuncts))
        throw SolverError("backend '" + name() + "' returned a model that violates the path condition");
    }
    return r;
  }

  std::uint64_t queries() const { return queries_; }
  virtual std::string name() const = 0;

 protected:
  virtual SatResult raw_check(const sym::PathCondition& pc) = 0;

 private:
  std::uint64_t queries_ = 0;
};

class BruteForceSession final : public Session {
 public:
  explicit BruteForceSession(unsigned max_bits = kDefaultBruteForceBits) : max_bits_(max_bits) {}
  std::string name() const override { return "brute-force"; }

 protected:
  SatResult raw_check(const sym::PathCondition& pc) override { return brute_check(pc.conjuncts(), max_bits_); }

 private:
  unsigned max_bits_;
};

namespace detail {

// Minimal s-expression tree for reading solver responses.
struct SNode {
  std::string atom;
  std::vector<SNode> items;
  bool list = false;
};

inline SNode parse_response(const std::string& text) {
  std::vector<SNode> stack(1);
  stack[0].list = true;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '(') {
      stack.emplace_back();
      stack.back().list = true;
      ++i;
    } else if (c == ')') {
      if (stack.size() < 2) throw SolverError("unbalanced solver response");
      SNode done = std::move(stack.back());
      stack.pop_back();
      stack.back().items.push_back(std::move(done));
      ++i;
    } else if (c == '"') {
      std::size_t j = text.find('"', i + 1);
      if (j == std::string::npos) throw SolverError("unterminated string in solver response");
      stack.back().items.push_back(SNode{text.substr(i, j - i + 1), {}, false});
      i = j + 1;
    } else {
      std::size_t j = i;
      while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) && text[j] != '(' && text[j] != ')')
        ++j;
      stack.back().items.push_back(SNode{text.substr(i, j - i), {}, false});
      i = j;
    }
  }
  if (stack.size() != 1) throw SolverError("unbalanced solver response");
  return std::move(stack[0]);
}

inline std::uint64_t parse_bv_value(const SNode& v) {
  if (!v.list) {
    const std::string& a = v.atom;
    if (a.rfind("#x", 0) == 0) return std::stoull(a.substr(2), nullptr, 16);
    if (a.rfind("#b", 0) == 0) return std::stoull(a.substr(2), nullptr, 2);
  } else if (v.items.size() == 3 && v.items[0].atom == "_" && v.items[1].atom.rfind("bv", 0) == 0) {
    return std::stoull(v.items[1].atom.substr(2));
  }
  throw SolverError("unexpected bitvector value in model");
}

/// Reads `(define-fun sN () (_ BitVec w) value)` entries; other entries are ignored.
inline Model parse_get_model(const std::string& text) {
  SNode root = parse_response(text);
  Model m;
  std::function<void(const SNode&)> visit = [&](const SNode& n) {
    if (!n.list) return;
    if (n.items.size() == 5 && n.items[0].atom == "define-fun") {
      const std::string& name = n.items[1].atom;
      const SNode& sort = n.items[3];
      if (name.size() > 1 && name[0] == 's' && std::isdigit(static_cast<unsigned char>(name[1])) && sort.list &&
          sort.items.size() == 3 && sort.items[1].atom == "BitVec") {
        const auto id = static_cast<std::uint32_t>(std::stoul(name.substr(1)));
        const auto width = static_cast<unsigned>(std::stoul(sort.items[2].atom));
        m[id] = Assignment{width, parse_bv_value(n.items[4]) & sym::mask(width)};
      }
      return;
    }
    for (const auto& k : n.items) visit(k);
  };
  visit(root);
  return m;
}

}  // namespace detail

/// SMT-LIB2 over a child process. With incremental sessions, each path-condition
/// conjunct lives at its own push level and a query pops back to the longest
/// prefix shared with the previous query; otherwise every query starts from a reset.
class ExternalSession final : public Session {
 public:
  ExternalSession(std::string command, double timeout_s, bool incremental)
      : command_(std::move(command)), timeout_s_(timeout_s), incremental_(incremental) {}

  std::string name() const override { return command_; }

 protected:
  SatResult raw_check(const sym::PathCondition& pc) override {
    if (!proc_ || !proc_->alive()) start();
    std::string script;
    std::vector<std::shared_ptr<const sym::PathCondition::Node>> nodes;
    for (auto n = pc.head_ptr(); n; n = n->prev) nodes.push_back(n);
    std::reverse(nodes.begin(), nodes.end());

    if (incremental_) {
      std::size_t keep = 0;
      while (keep < asserted_.size() && keep < nodes.size() && asserted_[keep] == nodes[keep]) ++keep;
      if (asserted_.size() > keep) {
        script += "(pop " + std::to_string(asserted_.size() - keep) + ")\n";
        while (asserted_.size() > keep) {
          asserted_.pop_back();
          encoder_.pop_scope();
        }
      }
      for (std::size_t i = keep; i < nodes.size(); ++i) {
        script += "(push 1)\n";
        encoder_.push_scope();
        script += encoder_.encode_assert(nodes[i]->conjunct);
        asserted_.push_back(nodes[i]);
      }
    } else {
      script += "(reset)\n" + preamble();
      encoder_.clear();
      for (const auto& n : nodes) script += encoder_.encode_assert(n->conjunct);
    }
    script += "(check-sat)\n";
    if (!proc_->write(script)) return lost("solver process closed its input");

    auto line = next_line();
    if (!line) return lost(timed_out_ ? "solver timeout" : "solver process exited");
    if (*line == "unsat") return Unsat{};
    if (*line == "unknown") return Unknown{"solver returned unknown"};
    if (*line != "sat") {
      const std::string msg = *line;
      restart_later();
      throw SolverError("unexpected reply from '" + command_ + "': " + msg);
    }
    if (!proc_->write("(get-model)\n")) return lost("solver process closed its input");
    std::string text;
    int depth = 0;
    bool started = false;
    while (!started || depth > 0) {
      auto l = next_line();
      if (!l) return lost(timed_out_ ? "solver timeout" : "solver process exited");
      for (char c : *l) {
        if (c == '(') {
          ++depth;
          started = true;
        } else if (c == ')') {
          --depth;
        }
      }
      text += *l + '\n';
    }
    return Sat{detail::parse_get_model(text)};
  }

 private:
  std::string preamble() const {
    std::string s = "(set-option :print-success false)\n(set-option :produce-models true)\n";
    if (timeout_s_ > 0) s += "(set-option :timeout " + std::to_string(static_cast<long>(timeout_s_ * 1000)) + ")\n";
    return s + "(set-logic QF_BV)\n";
  }

  void start() {
    proc_ = std::make_unique<ChildProcess>(command_);
    asserted_.clear();
    encoder_.clear();
    proc_->write(preamble());
  }

  std::optional<std::string> next_line() {
    timed_out_ = false;
    const int limit = timeout_s_ > 0 ? static_cast<int>(timeout_s_ * 1000) + 5000 : -1;
    const auto began = std::chrono::steady_clock::now();
    for (;;) {
      auto l = proc_->read_line(limit);
      if (!l) {
        timed_out_ = limit >= 0 && std::chrono::steady_clock::now() - began >= std::chrono::milliseconds(limit);
        return std::nullopt;
      }
      if (!l->empty()) return l;
    }
  }

  SatResult lost(const std::string& why) {
    restart_later();
    return Unknown{why};
  }

  void restart_later() {
    if (proc_) proc_->terminate();
    asserted_.clear();
    encoder_.clear();
  }

  std::string command_;
  double timeout_s_;
  bool incremental_;
  bool timed_out_ = false;
  std::unique_ptr<ChildProcess> proc_;
  SmtEncoder encoder_;
  std::vector<std::shared_ptr<const sym::PathCondition::Node>> asserted_;
};

/// Replaces Auto by External when the command is executable, else BruteForce;
/// `warn` receives a message when falling back.
inline SolverConfig resolve(SolverConfig cfg, const std::function<void(const std::string&)>& warn = {}) {
  if (cfg.backend != Backend::Auto) return cfg;
  if (command_available(cfg.command)) {
    cfg.backend = Backend::External;
  } else {
    cfg.backend = Backend::BruteForce;
    if (warn) warn("solver command '" + cfg.command + "' not found; using the brute-force backend");
  }
  return cfg;
}

inline std::unique_ptr<Session> make_session(const SolverConfig& cfg) {
  switch (resolve(cfg).backend) {
    case Backend::External: return std::make_unique<ExternalSession>(cfg.command, cfg.timeout_s, cfg.incremental);
    default: return std::make_unique<BruteForceSession>(cfg.brute_force_bits);
  }
}

}  // namespace wasym::solver
