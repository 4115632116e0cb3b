#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wasym::wat {

/// Error raised while reading or elaborating Wasm text.
class ParseError : public std::runtime_error {
 public:
  enum class Kind { Syntax, UnknownOpcode, Unsupported };

  ParseError(Kind kind, int line, int column, const std::string& message, std::string feature = {})
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        kind_(kind),
        line_(line),
        column_(column),
        feature_(std::move(feature)) {}

  Kind kind() const { return kind_; }
  int line() const { return line_; }
  int column() const { return column_; }
  /// Name of the unsupported feature when kind() == Unsupported.
  const std::string& feature() const { return feature_; }

 private:
  Kind kind_;
  int line_;
  int column_;
  std::string feature_;
};

struct SExpr {
  enum class Kind { List, Keyword, Id, Number, String };

  Kind kind = Kind::List;
  std::string text;  // atom text; for strings, the decoded bytes; ids without '$'
  std::vector<SExpr> items;
  int line = 1;
  int column = 1;

  bool is_list() const { return kind == Kind::List; }
  bool is_keyword(std::string_view k) const { return kind == Kind::Keyword && text == k; }
  /// True for a list whose first element is the given keyword.
  bool is_form(std::string_view head) const {
    return kind == Kind::List && !items.empty() && items.front().is_keyword(head);
  }
  std::string_view head() const {
    return kind == Kind::List && !items.empty() && items.front().kind == Kind::Keyword ? std::string_view{items.front().text}
                                                                                         : std::string_view{};
  }
};

namespace detail {

class Reader {
 public:
  explicit Reader(std::string_view src) : src_(src) {}

  std::vector<SExpr> read_all() {
    std::vector<SExpr> out;
    skip_trivia();
    while (pos_ < src_.size()) {
      out.push_back(read());
      skip_trivia();
    }
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(ParseError::Kind::Syntax, line_, col_, msg); }

  char peek(std::size_t ahead = 0) const { return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0'; }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_trivia() {
    while (pos_ < src_.size()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        advance();
      } else if (c == ';' && peek(1) == ';') {
        while (pos_ < src_.size() && peek() != '\n') advance();
      } else if (c == '(' && peek(1) == ';') {
        int depth = 0;
        do {
          if (pos_ >= src_.size()) fail("unterminated block comment");
          if (peek() == '(' && peek(1) == ';') {
            ++depth;
            advance();
            advance();
          } else if (peek() == ';' && peek(1) == ')') {
            --depth;
            advance();
            advance();
          } else {
            advance();
          }
        } while (depth > 0);
      } else {
        break;
      }
    }
  }

  static bool is_atom_char(char c) {
    return c > ' ' && c != '(' && c != ')' && c != '"' && c != ';' && c != 0x7f;
  }

  static int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  }

  static void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  SExpr read_string() {
    SExpr s{SExpr::Kind::String, {}, {}, line_, col_};
    advance();  // opening quote
    for (;;) {
      if (pos_ >= src_.size()) fail("unterminated string");
      const char c = peek();
      if (c == '"') {
        advance();
        break;
      }
      if (c == '\n') fail("newline in string");
      if (c != '\\') {
        s.text += c;
        advance();
        continue;
      }
      advance();
      const char e = peek();
      switch (e) {
        case 'n': s.text += '\n'; advance(); break;
        case 't': s.text += '\t'; advance(); break;
        case 'r': s.text += '\r'; advance(); break;
        case '\\': s.text += '\\'; advance(); break;
        case '\'': s.text += '\''; advance(); break;
        case '"': s.text += '"'; advance(); break;
        case 'u': {
          advance();
          if (peek() != '{') fail("malformed unicode escape");
          advance();
          std::uint32_t cp = 0;
          while (peek() != '}') {
            const int d = hex_digit(peek());
            if (d < 0) fail("malformed unicode escape");
            cp = cp * 16 + static_cast<std::uint32_t>(d);
            if (cp > 0x10FFFF) fail("unicode escape out of range");
            advance();
          }
          advance();
          append_utf8(s.text, cp);
          break;
        }
        default: {
          const int hi = hex_digit(e);
          const int lo = hex_digit(peek(1));
          if (hi < 0 || lo < 0) fail("unknown string escape");
          s.text += static_cast<char>(hi * 16 + lo);
          advance();
          advance();
        }
      }
    }
    return s;
  }

  SExpr read() {
    skip_trivia();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = peek();
    if (c == '(') {
      SExpr list{SExpr::Kind::List, {}, {}, line_, col_};
      advance();
      for (;;) {
        skip_trivia();
        if (pos_ >= src_.size()) fail("unclosed parenthesis opened at " + std::to_string(list.line) + ":" +
                                      std::to_string(list.column));
        if (peek() == ')') {
          advance();
          return list;
        }
        list.items.push_back(read());
      }
    }
    if (c == ')') fail("unexpected ')'");
    if (c == '"') return read_string();

    SExpr atom{SExpr::Kind::Keyword, {}, {}, line_, col_};
    while (pos_ < src_.size() && is_atom_char(peek())) {
      atom.text += peek();
      advance();
    }
    if (atom.text.empty()) fail(std::string{"unexpected character '"} + c + "'");
    if (atom.text.front() == '$') {
      atom.kind = SExpr::Kind::Id;
      atom.text.erase(0, 1);
      if (atom.text.empty()) fail("empty identifier");
    } else if ((atom.text.front() >= '0' && atom.text.front() <= '9') || atom.text.front() == '-' ||
               atom.text.front() == '+') {
      atom.kind = SExpr::Kind::Number;
    } else if (!((atom.text.front() >= 'a' && atom.text.front() <= 'z'))) {
      fail("malformed token '" + atom.text + "'");
    }
    return atom;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace detail

/// Splits Wasm text into s-expressions, dropping `;;` and `(; ;)` comments.
inline std::vector<SExpr> read_sexprs(std::string_view source) { return detail::Reader{source}.read_all(); }

}  // namespace wasym::wat
