#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "wasym/values/expr.hpp"

namespace wasym::solver {

struct Assignment {
  unsigned width = 32;
  std::uint64_t bits = 0;
  bool operator==(const Assignment&) const = default;
};

/// Symbol id to concrete value.
using Model = std::map<std::uint32_t, Assignment>;

struct Sat {
  Model model;
};
struct Unsat {};
struct Unknown {
  std::string reason;
};
using SatResult = std::variant<Sat, Unsat, Unknown>;

inline bool is_sat(const SatResult& r) { return std::holds_alternative<Sat>(r); }
inline bool is_unsat(const SatResult& r) { return std::holds_alternative<Unsat>(r); }
inline bool is_unknown(const SatResult& r) { return std::holds_alternative<Unknown>(r); }

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string render_model(const Model& m) {
  std::string out = "Model:\n";
  if (m.empty()) return out + "  (model)\n";
  out += "  (model";
  for (const auto& [id, a] : m) {
    out += "\n    (symbol_" + std::to_string(id) + " (i" + std::to_string(a.width) + ' ' +
           std::to_string(sym::to_signed(a.bits, a.width)) + "))";
  }
  return out + ")\n";
}

namespace detail {

class ModelReader {
 public:
  explicit ModelReader(std::string_view text) : t_(text) {}

  Model read() {
    skip();
    if (t_.substr(i_, 6) == "Model:") i_ += 6;
    expect('(');
    word("model");
    Model m;
    for (;;) {
      skip();
      if (peek() == ')') {
        ++i_;
        break;
      }
      expect('(');
      const std::string name = atom();
      if (name.rfind("symbol_", 0) != 0) fail("expected symbol_<id>, got '" + name + "'");
      const std::uint32_t id = static_cast<std::uint32_t>(number(name.substr(7), false));
      expect('(');
      const std::string ty = atom();
      unsigned width = 0;
      if (ty == "i32") {
        width = 32;
      } else if (ty == "i64") {
        width = 64;
      } else {
        fail("unsupported value type '" + ty + "'");
      }
      const std::string lit = atom();
      const std::uint64_t bits = static_cast<std::uint64_t>(number(lit, true)) & sym::mask(width);
      const std::int64_t back = sym::to_signed(bits, width);
      if (std::to_string(back) != lit && std::to_string(bits) != lit) fail("value " + lit + " does not fit " + ty);
      expect(')');
      expect(')');
      if (!m.emplace(id, Assignment{width, bits}).second) fail("duplicate symbol_" + std::to_string(id));
    }
    skip();
    if (i_ != t_.size()) fail("trailing text after model");
    return m;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) { throw ModelFormatError("model: " + msg); }

  void skip() {
    while (i_ < t_.size() && std::isspace(static_cast<unsigned char>(t_[i_]))) ++i_;
  }
  char peek() const { return i_ < t_.size() ? t_[i_] : '\0'; }
  void expect(char c) {
    skip();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++i_;
  }
  std::string atom() {
    skip();
    std::size_t s = i_;
    while (i_ < t_.size() && !std::isspace(static_cast<unsigned char>(t_[i_])) && t_[i_] != '(' && t_[i_] != ')') ++i_;
    if (s == i_) fail("expected an atom");
    return std::string(t_.substr(s, i_ - s));
  }
  void word(std::string_view w) {
    if (atom() != w) fail("expected '" + std::string(w) + "'");
  }
  std::int64_t number(const std::string& s, bool allow_sign) {
    try {
      std::size_t pos = 0;
      if (!allow_sign && (s.empty() || !std::isdigit(static_cast<unsigned char>(s[0])))) fail("bad number '" + s + "'");
      if (!s.empty() && s[0] != '-') {
        const unsigned long long u = std::stoull(s, &pos, 10);
        if (pos != s.size()) fail("bad number '" + s + "'");
        return static_cast<std::int64_t>(u);
      }
      const long long v = std::stoll(s, &pos, 10);
      if (pos != s.size()) fail("bad number '" + s + "'");
      return v;
    } catch (const std::logic_error&) {
      fail("bad number '" + s + "'");
    }
  }

  std::string_view t_;
  std::size_t i_ = 0;
};

}  // namespace detail

/// Parses the text produced by render_model (the `Model:` header is optional).
inline Model parse_model(std::string_view text) { return detail::ModelReader(text).read(); }

}  // namespace wasym::solver
