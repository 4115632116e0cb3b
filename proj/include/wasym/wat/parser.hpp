#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wasym/wat/ast.hpp"
#include "wasym/wat/sexpr.hpp"

namespace wasym::wat {

namespace detail {

struct ParsedInt {
  bool negative = false;
  std::uint64_t magnitude = 0;
};

inline std::optional<ParsedInt> parse_int(std::string_view s) {
  ParsedInt r;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    r.negative = s.front() == '-';
    s.remove_prefix(1);
  }
  unsigned base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  }
  if (s.empty() || s.front() == '_' || s.back() == '_') return std::nullopt;
  bool prev_underscore = false;
  for (const char c : s) {
    if (c == '_') {
      if (prev_underscore) return std::nullopt;
      prev_underscore = true;
      continue;
    }
    prev_underscore = false;
    unsigned d;
    if (c >= '0' && c <= '9') {
      d = static_cast<unsigned>(c - '0');
    } else if (base == 16 && c >= 'a' && c <= 'f') {
      d = static_cast<unsigned>(c - 'a' + 10);
    } else if (base == 16 && c >= 'A' && c <= 'F') {
      d = static_cast<unsigned>(c - 'A' + 10);
    } else {
      return std::nullopt;
    }
    if (r.magnitude > (std::numeric_limits<std::uint64_t>::max() - d) / base) return std::nullopt;
    r.magnitude = r.magnitude * base + d;
  }
  return r;
}

/// Names the feature a known-but-unsupported token belongs to, if any.
inline std::optional<std::string> unsupported_feature(std::string_view kw) {
  auto starts = [&](std::string_view p) { return kw.substr(0, p.size()) == p; };
  for (std::string_view simd : {"v128", "i8x16", "i16x8", "i32x4", "i64x2", "f32x4", "f64x2"}) {
    if (starts(simd)) return "simd";
  }
  if (starts("f32")) return "f32";
  if (starts("f64")) return "f64";
  if (kw.find("f32") != std::string_view::npos) return "f32";
  if (kw.find("f64") != std::string_view::npos) return "f64";
  if (starts("ref.") || kw == "funcref" || kw == "externref") return "reference types";
  if (starts("table.")) return "table instructions";
  if (starts("memory.copy") || starts("memory.fill") || starts("memory.init") || starts("data.drop") ||
      starts("elem.drop"))
    return "bulk memory";
  if (kw == "br_table") return "br_table";
  if (starts("return_call")) return "tail calls";
  if (starts("try") || starts("throw") || starts("rethrow") || kw == "catch" || kw == "delegate")
    return "exceptions";
  if (starts("struct.") || starts("array.") || starts("i31.")) return "gc";
  if (starts("i32.atomic") || starts("i64.atomic") || starts("memory.atomic") || kw == "atomic.fence")
    return "threads";
  for (std::string_view t : {"i32.", "i64."}) {
    if (!starts(t)) continue;
    const std::string_view rest = kw.substr(4);
    for (std::string_view op : {"clz", "ctz", "popcnt", "rotl", "rotr", "extend8_s", "extend16_s", "extend32_s"}) {
      if (rest == op) return std::string{kw};
    }
    if (rest.substr(0, 5) == "trunc" || rest.substr(0, 11) == "reinterpret") return "f32";
  }
  if (kw == "select_typed") return "reference types";
  return std::nullopt;
}

class Elaborator {
 public:
  Module run(const std::vector<SExpr>& top) {
    const std::vector<SExpr>* fields = &top;
    std::size_t first = 0;
    if (top.size() == 1 && top.front().is_form("module")) {
      fields = &top.front().items;
      first = 1;
      if (first < fields->size() && (*fields)[first].kind == SExpr::Kind::Id) ++first;
    } else if (top.empty()) {
      throw ParseError(ParseError::Kind::Syntax, 1, 1, "empty input: expected (module ...)");
    } else if (!top.empty() && top.front().is_form("module")) {
      const SExpr& extra = top[1];
      fail(extra, "unexpected content after module");
    }

    for (std::size_t i = first; i < fields->size(); ++i) declare((*fields)[i]);
    for (const auto& pending : pending_funcs_) define_function(pending);
    for (std::size_t i = first; i < fields->size(); ++i) late_field((*fields)[i]);
    return std::move(m_);
  }

 private:
  struct PendingFunc {
    const SExpr* form;
    std::size_t body_start;
    std::uint32_t def_index;
    std::vector<std::optional<std::string>> local_names;
  };

  struct TypeUse {
    std::optional<std::uint32_t> index;
    FuncType inline_type;
    bool has_inline = false;
    std::vector<std::optional<std::string>> param_names;
  };

  [[noreturn]] static void fail(const SExpr& at, const std::string& msg) {
    throw ParseError(ParseError::Kind::Syntax, at.line, at.column, msg);
  }

  [[noreturn]] static void unsupported(const SExpr& at, const std::string& feature) {
    throw ParseError(ParseError::Kind::Unsupported, at.line, at.column, "unsupported feature \"" + feature + "\"",
                     feature);
  }

  static const SExpr& expect_item(const SExpr& list, std::size_t i, const char* what) {
    if (i >= list.items.size()) fail(list, std::string{"expected "} + what);
    return list.items[i];
  }

  static std::string expect_string(const SExpr& s) {
    if (s.kind != SExpr::Kind::String) fail(s, "expected a string literal");
    return s.text;
  }

  static ValueType value_type(const SExpr& s) {
    if (s.is_keyword("i32")) return ValueType::I32;
    if (s.is_keyword("i64")) return ValueType::I64;
    if (s.kind == SExpr::Kind::Keyword) {
      if (auto f = unsupported_feature(s.text)) unsupported(s, *f);
    }
    fail(s, "expected a value type, found '" + s.text + "'");
  }

  static std::uint32_t parse_u32(const SExpr& s) {
    if (s.kind != SExpr::Kind::Number) fail(s, "expected a number");
    auto v = parse_int(s.text);
    if (!v || v->negative || v->magnitude > std::numeric_limits<std::uint32_t>::max())
      fail(s, "malformed unsigned 32-bit integer '" + s.text + "'");
    return static_cast<std::uint32_t>(v->magnitude);
  }

  static std::uint64_t parse_const(const SExpr& s, ValueType t) {
    if (s.kind != SExpr::Kind::Number) fail(s, "expected an integer constant");
    auto v = parse_int(s.text);
    if (!v) fail(s, "malformed integer constant '" + s.text + "'");
    if (t == ValueType::I32) {
      if (v->negative) {
        if (v->magnitude > (1ULL << 31)) fail(s, "i32 constant out of range");
        return static_cast<std::uint32_t>(0U - static_cast<std::uint32_t>(v->magnitude));
      }
      if (v->magnitude > 0xFFFFFFFFULL) fail(s, "i32 constant out of range");
      return v->magnitude;
    }
    if (v->negative) {
      if (v->magnitude > (1ULL << 63)) fail(s, "i64 constant out of range");
      return 0ULL - v->magnitude;
    }
    return v->magnitude;
  }

  static std::uint32_t resolve(const SExpr& s, const std::map<std::string, std::uint32_t>& names, const char* what) {
    if (s.kind == SExpr::Kind::Number) return parse_u32(s);
    if (s.kind == SExpr::Kind::Id) {
      auto it = names.find(s.text);
      if (it == names.end()) fail(s, std::string{"unknown "} + what + " $" + s.text);
      return it->second;
    }
    fail(s, std::string{"expected a "} + what + " index");
  }

  static void bind_name(std::map<std::string, std::uint32_t>& names, const SExpr& id, std::uint32_t index,
                        const char* what) {
    if (!names.emplace(id.text, index).second) fail(id, std::string{"duplicate "} + what + " $" + id.text);
  }

  std::uint32_t intern_type(const FuncType& t) {
    for (std::size_t i = 0; i < m_.types.size(); ++i) {
      if (m_.types[i] == t) return static_cast<std::uint32_t>(i);
    }
    m_.types.push_back(t);
    return static_cast<std::uint32_t>(m_.types.size() - 1);
  }

  // Consumes (type x)? (param ...)* (result ...)* starting at items[i].
  TypeUse parse_typeuse(const SExpr& list, std::size_t& i, bool allow_param_names) {
    TypeUse use;
    if (i < list.items.size() && list.items[i].is_form("type")) {
      const SExpr& t = list.items[i];
      use.index = resolve(expect_item(t, 1, "type index"), type_names_, "type");
      if (*use.index >= m_.types.size()) fail(t, "type index out of range");
      ++i;
    }
    while (i < list.items.size() && list.items[i].is_form("param")) {
      const SExpr& p = list.items[i];
      use.has_inline = true;
      if (p.items.size() >= 2 && p.items[1].kind == SExpr::Kind::Id) {
        if (!allow_param_names) fail(p.items[1], "named parameters are not allowed here");
        if (p.items.size() != 3) fail(p, "a named parameter declares exactly one type");
        use.param_names.emplace_back(p.items[1].text);
        use.inline_type.params.push_back(value_type(p.items[2]));
      } else {
        for (std::size_t k = 1; k < p.items.size(); ++k) {
          use.param_names.emplace_back(std::nullopt);
          use.inline_type.params.push_back(value_type(p.items[k]));
        }
      }
      ++i;
    }
    while (i < list.items.size() && list.items[i].is_form("result")) {
      const SExpr& r = list.items[i];
      use.has_inline = true;
      for (std::size_t k = 1; k < r.items.size(); ++k) use.inline_type.results.push_back(value_type(r.items[k]));
      ++i;
    }
    if (use.index && use.has_inline && m_.types[*use.index] != use.inline_type)
      fail(list, "inline function type does not match the referenced type");
    if (use.index && !use.has_inline) {
      use.param_names.assign(m_.types[*use.index].params.size(), std::nullopt);
    }
    return use;
  }

  std::uint32_t resolve_typeuse(const TypeUse& use, FuncType& out) {
    const std::uint32_t idx = use.index ? *use.index : intern_type(use.inline_type);
    out = m_.types[idx];
    return idx;
  }

  void declare(const SExpr& field) {
    if (!field.is_list() || field.head().empty()) fail(field, "expected a module field");
    const std::string_view head = field.head();
    if (head == "type") {
      std::size_t i = 1;
      std::optional<std::string> name;
      if (i < field.items.size() && field.items[i].kind == SExpr::Kind::Id) name = field.items[i++].text;
      const SExpr& fn = expect_item(field, i, "(func ...)");
      if (!fn.is_form("func")) fail(fn, "expected (func ...) in type definition");
      std::size_t j = 1;
      TypeUse use = parse_typeuse(fn, j, true);
      if (use.index) fail(fn, "type definitions cannot reference other types");
      if (j != fn.items.size()) fail(fn.items[j], "unexpected item in function type");
      m_.types.push_back(use.inline_type);
      if (name) bind_name(type_names_, field.items[1], static_cast<std::uint32_t>(m_.types.size() - 1), "type");
    } else if (head == "import") {
      const std::string module = expect_string(expect_item(field, 1, "module name"));
      const std::string item = expect_string(expect_item(field, 2, "item name"));
      const SExpr& desc = expect_item(field, 3, "import description");
      if (!desc.is_form("func")) unsupported(desc, "non-function imports");
      std::size_t i = 1;
      std::optional<SExpr> id;
      if (i < desc.items.size() && desc.items[i].kind == SExpr::Kind::Id) id = desc.items[i++];
      add_import(desc, id, module, item, i);
    } else if (head == "func") {
      std::size_t i = 1;
      std::optional<SExpr> id;
      if (i < field.items.size() && field.items[i].kind == SExpr::Kind::Id) id = field.items[i++];
      std::vector<std::string> exports;
      while (i < field.items.size() && field.items[i].is_form("export")) {
        exports.push_back(expect_string(expect_item(field.items[i], 1, "export name")));
        ++i;
      }
      if (i < field.items.size() && field.items[i].is_form("import")) {
        const SExpr& imp = field.items[i++];
        const std::string module = expect_string(expect_item(imp, 1, "module name"));
        const std::string item = expect_string(expect_item(imp, 2, "item name"));
        const std::uint32_t index = add_import(field, id, module, item, i);
        for (auto& e : exports) m_.exports.push_back(Export{e, index});
        return;
      }
      TypeUse use = parse_typeuse(field, i, true);
      Function f;
      if (id) f.name = id->text;
      f.type_index = resolve_typeuse(use, f.type);
      std::vector<std::optional<std::string>> local_names = use.param_names;
      while (i < field.items.size() && field.items[i].is_form("local")) {
        const SExpr& l = field.items[i];
        if (l.items.size() >= 2 && l.items[1].kind == SExpr::Kind::Id) {
          if (l.items.size() != 3) fail(l, "a named local declares exactly one type");
          local_names.emplace_back(l.items[1].text);
          f.locals.push_back(value_type(l.items[2]));
        } else {
          for (std::size_t k = 1; k < l.items.size(); ++k) {
            local_names.emplace_back(std::nullopt);
            f.locals.push_back(value_type(l.items[k]));
          }
        }
        ++i;
      }
      const auto index = static_cast<std::uint32_t>(m_.imports.size() + m_.functions.size());
      if (id) bind_name(func_names_, *id, index, "function");
      for (auto& e : exports) m_.exports.push_back(Export{e, index});
      pending_funcs_.push_back(
          PendingFunc{&field, i, static_cast<std::uint32_t>(m_.functions.size()), std::move(local_names)});
      m_.functions.push_back(std::move(f));
    } else if (head == "memory") {
      if (m_.memory) unsupported(field, "multi-memory");
      std::size_t i = 1;
      if (i < field.items.size() && field.items[i].kind == SExpr::Kind::Id) ++i;
      while (i < field.items.size() && field.items[i].is_form("export")) ++i;
      if (i < field.items.size() && field.items[i].is_form("import")) unsupported(field.items[i], "memory imports");
      if (i < field.items.size() && field.items[i].is_form("data")) unsupported(field.items[i], "inline data");
      MemoryDecl mem;
      mem.min_pages = parse_u32(expect_item(field, i++, "minimum page count"));
      if (i < field.items.size() && field.items[i].kind == SExpr::Kind::Number)
        mem.max_pages = parse_u32(field.items[i++]);
      if (i < field.items.size() && field.items[i].is_keyword("shared")) unsupported(field.items[i], "threads");
      if (i != field.items.size()) fail(field.items[i], "unexpected item in memory declaration");
      if (mem.min_pages > kMaxPages || (mem.max_pages && *mem.max_pages > kMaxPages))
        fail(field, "memory size must be at most 65536 pages");
      m_.memory = mem;
    } else if (head == "table") {
      if (m_.table) unsupported(field, "multiple tables");
      std::size_t i = 1;
      if (i < field.items.size() && field.items[i].kind == SExpr::Kind::Id) {
        table_name_ = field.items[i].text;
        ++i;
      }
      while (i < field.items.size() && field.items[i].is_form("export")) ++i;
      TableDecl table;
      if (i < field.items.size() && field.items[i].is_keyword("funcref")) {
        // (table funcref (elem $f ...))
        ++i;
        const SExpr& elem = expect_item(field, i, "(elem ...)");
        if (!elem.is_form("elem")) fail(elem, "expected (elem ...)");
        inline_elem_ = &elem;
        table.min_size = static_cast<std::uint32_t>(elem.items.size() - 1);
        table.max_size = table.min_size;
        ++i;
      } else {
        table.min_size = parse_u32(expect_item(field, i++, "table size"));
        if (i < field.items.size() && field.items[i].kind == SExpr::Kind::Number)
          table.max_size = parse_u32(field.items[i++]);
        const SExpr& rt = expect_item(field, i++, "funcref");
        if (!rt.is_keyword("funcref")) {
          if (rt.is_keyword("externref")) unsupported(rt, "reference types");
          fail(rt, "expected funcref");
        }
      }
      if (i != field.items.size()) fail(field.items[i], "unexpected item in table declaration");
      m_.table = table;
    } else if (head == "global") {
      std::size_t i = 1;
      std::optional<SExpr> id;
      if (i < field.items.size() && field.items[i].kind == SExpr::Kind::Id) id = field.items[i++];
      while (i < field.items.size() && field.items[i].is_form("export")) ++i;
      if (i < field.items.size() && field.items[i].is_form("import")) unsupported(field.items[i], "global imports");
      Global g;
      if (id) g.name = id->text;
      const SExpr& ty = expect_item(field, i++, "global type");
      if (ty.is_form("mut")) {
        g.is_mutable = true;
        g.type = value_type(expect_item(ty, 1, "value type"));
      } else {
        g.type = value_type(ty);
      }
      g.init = const_expr(expect_item(field, i++, "initializer"), g.type);
      if (i != field.items.size()) fail(field.items[i], "unexpected item in global");
      if (id) bind_name(global_names_, *id, static_cast<std::uint32_t>(m_.globals.size()), "global");
      m_.globals.push_back(g);
    } else if (head == "export" || head == "elem" || head == "data") {
      // resolved once all names are known
    } else if (head == "start") {
      unsupported(field, "start function");
    } else if (head == "tag") {
      unsupported(field, "exceptions");
    } else if (head == "rec") {
      unsupported(field, "gc");
    } else {
      fail(field, "unknown module field '" + std::string{head} + "'");
    }
  }

  std::uint32_t add_import(const SExpr& form, const std::optional<SExpr>& id, const std::string& module,
                           const std::string& item, std::size_t i) {
    if (!m_.functions.empty()) fail(form, "function imports must precede function definitions");
    TypeUse use = parse_typeuse(form, i, true);
    if (i != form.items.size()) fail(form.items[i], "unexpected item in import");
    Import imp;
    imp.module = module;
    imp.field = item;
    if (id) imp.name = id->text;
    imp.type_index = resolve_typeuse(use, imp.type);
    const auto index = static_cast<std::uint32_t>(m_.imports.size());
    if (id) bind_name(func_names_, *id, index, "function");
    m_.imports.push_back(std::move(imp));
    return index;
  }

  static std::uint64_t const_expr(const SExpr& e, ValueType t) {
    if (e.is_form("i32.const") || e.is_form("i64.const")) {
      const ValueType et = e.head() == "i32.const" ? ValueType::I32 : ValueType::I64;
      if (et != t) fail(e, "initializer type mismatch");
      if (e.items.size() != 2) fail(e, "malformed constant expression");
      return parse_const(e.items[1], t);
    }
    if (e.is_list() && !e.head().empty()) {
      if (auto f = unsupported_feature(e.head())) unsupported(e, *f);
    }
    unsupported(e, "extended constant expressions");
  }

  std::uint32_t offset_expr(const SExpr& e) {
    const SExpr* c = &e;
    if (e.is_form("offset")) c = &expect_item(e, 1, "offset expression");
    return static_cast<std::uint32_t>(const_expr(*c, ValueType::I32));
  }

  void late_field(const SExpr& field) {
    const std::string_view head = field.head();
    if (head == "export") {
      const std::string name = expect_string(expect_item(field, 1, "export name"));
      const SExpr& desc = expect_item(field, 2, "export description");
      if (desc.is_form("func")) {
        const auto idx = resolve(expect_item(desc, 1, "function"), func_names_, "function");
        if (idx >= m_.function_count()) fail(desc, "function index out of range");
        m_.exports.push_back(Export{name, idx});
      } else if (!(desc.is_form("memory") || desc.is_form("global") || desc.is_form("table"))) {
        fail(desc, "malformed export description");
      }
    } else if (head == "elem") {
      std::size_t i = 1;
      if (i < field.items.size() && field.items[i].kind == SExpr::Kind::Id) ++i;
      if (i < field.items.size() && field.items[i].is_form("table")) ++i;
      if (i >= field.items.size() || !field.items[i].is_list()) unsupported(field, "passive element segments");
      ElemSegment seg;
      seg.offset = offset_expr(field.items[i++]);
      if (i < field.items.size() && field.items[i].is_keyword("func")) ++i;
      for (; i < field.items.size(); ++i) {
        const SExpr& f = field.items[i];
        if (f.is_list()) unsupported(f, "reference types");
        seg.functions.push_back(resolve(f, func_names_, "function"));
      }
      m_.elems.push_back(std::move(seg));
    } else if (head == "data") {
      std::size_t i = 1;
      if (i < field.items.size() && field.items[i].kind == SExpr::Kind::Id) ++i;
      if (i < field.items.size() && field.items[i].is_form("memory")) ++i;
      if (i >= field.items.size() || !field.items[i].is_list()) unsupported(field, "bulk memory");
      DataSegment seg;
      seg.offset = offset_expr(field.items[i++]);
      for (; i < field.items.size(); ++i) seg.bytes += expect_string(field.items[i]);
      m_.data.push_back(std::move(seg));
    } else if (head == "table" && inline_elem_) {
      ElemSegment seg;
      for (std::size_t k = 1; k < inline_elem_->items.size(); ++k)
        seg.functions.push_back(resolve(inline_elem_->items[k], func_names_, "function"));
      m_.elems.push_back(std::move(seg));
      inline_elem_ = nullptr;
    }
  }

  // ---- function bodies ----

  struct BodyContext {
    std::map<std::string, std::uint32_t> locals;
    std::vector<std::optional<std::string>> labels;
  };

  void define_function(const PendingFunc& pf) {
    BodyContext ctx;
    for (std::size_t k = 0; k < pf.local_names.size(); ++k) {
      if (pf.local_names[k] && !ctx.locals.emplace(*pf.local_names[k], static_cast<std::uint32_t>(k)).second)
        fail(*pf.form, "duplicate local $" + *pf.local_names[k]);
    }
    ctx.labels.emplace_back(std::nullopt);  // the function body
    std::size_t i = pf.body_start;
    std::vector<Instr> body;
    parse_sequence(pf.form->items, i, body, ctx, /*flat_block=*/false);
    if (i != pf.form->items.size()) fail(pf.form->items[i], "unexpected '" + pf.form->items[i].text + "'");
    m_.functions[pf.def_index].body = std::move(body);
  }

  std::uint32_t resolve_label(const SExpr& s, const BodyContext& ctx) {
    if (s.kind == SExpr::Kind::Number) return parse_u32(s);
    if (s.kind == SExpr::Kind::Id) {
      for (std::size_t d = 0; d < ctx.labels.size(); ++d) {
        const auto& l = ctx.labels[ctx.labels.size() - 1 - d];
        if (l && *l == s.text) return static_cast<std::uint32_t>(d);
      }
      fail(s, "unknown label $" + s.text);
    }
    fail(s, "expected a label");
  }

  // Parses instructions until the end of `items`, or until `end`/`else` when inside a flat block.
  void parse_sequence(const std::vector<SExpr>& items, std::size_t& i, std::vector<Instr>& out, BodyContext& ctx,
                      bool flat_block) {
    while (i < items.size()) {
      const SExpr& it = items[i];
      if (it.is_list()) {
        parse_folded(it, out, ctx);
        ++i;
        continue;
      }
      if (it.kind != SExpr::Kind::Keyword) fail(it, "expected an instruction, found '" + it.text + "'");
      if (it.text == "end" || it.text == "else") {
        if (!flat_block) fail(it, "unexpected '" + it.text + "'");
        return;
      }
      ++i;
      if (it.text == "block" || it.text == "loop" || it.text == "if") {
        parse_flat_block(it, items, i, out, ctx);
      } else {
        out.push_back(parse_plain(it, items, i, ctx, /*folded=*/false));
      }
    }
  }

  std::optional<std::string> block_label(const std::vector<SExpr>& items, std::size_t& i) {
    if (i < items.size() && items[i].kind == SExpr::Kind::Id) return items[i++].text;
    return std::nullopt;
  }

  std::optional<ValueType> block_type(const std::vector<SExpr>& items, std::size_t& i) {
    std::optional<ValueType> result;
    if (i < items.size() && items[i].is_form("type")) {
      const SExpr& t = items[i++];
      const auto idx = resolve(expect_item(t, 1, "type index"), type_names_, "type");
      if (idx >= m_.types.size()) fail(t, "type index out of range");
      const FuncType& ft = m_.types[idx];
      if (!ft.params.empty() || ft.results.size() > 1) unsupported(t, "multi-value");
      if (!ft.results.empty()) result = ft.results.front();
    }
    if (i < items.size() && items[i].is_form("param")) unsupported(items[i], "multi-value");
    while (i < items.size() && items[i].is_form("result")) {
      const SExpr& r = items[i++];
      for (std::size_t k = 1; k < r.items.size(); ++k) {
        if (result) unsupported(r, "multi-value");
        result = value_type(r.items[k]);
      }
    }
    return result;
  }

  void check_end_label(const std::vector<SExpr>& items, std::size_t& i, const std::optional<std::string>& label) {
    if (i < items.size() && items[i].kind == SExpr::Kind::Id) {
      if (!label || *label != items[i].text) fail(items[i], "mismatched block label $" + items[i].text);
      ++i;
    }
  }

  void parse_flat_block(const SExpr& kw, const std::vector<SExpr>& items, std::size_t& i, std::vector<Instr>& out,
                        BodyContext& ctx) {
    Instr in;
    in.op = kw.text == "block" ? Opcode::Block : kw.text == "loop" ? Opcode::Loop : Opcode::If;
    const auto label = block_label(items, i);
    in.block_result = block_type(items, i);
    ctx.labels.push_back(label);
    parse_sequence(items, i, in.body, ctx, true);
    if (i >= items.size()) fail(kw, "missing 'end' for " + kw.text);
    if (items[i].text == "else") {
      if (in.op != Opcode::If) fail(items[i], "'else' outside of 'if'");
      ++i;
      check_end_label(items, i, label);
      parse_sequence(items, i, in.else_body, ctx, true);
      if (i >= items.size() || items[i].text != "end") fail(kw, "missing 'end' for if");
    }
    ++i;  // end
    check_end_label(items, i, label);
    ctx.labels.pop_back();
    out.push_back(std::move(in));
  }

  void parse_folded(const SExpr& form, std::vector<Instr>& out, BodyContext& ctx) {
    if (form.items.empty() || form.items.front().kind != SExpr::Kind::Keyword)
      fail(form, "expected a folded instruction");
    const SExpr& kw = form.items.front();
    std::size_t i = 1;
    if (kw.text == "block" || kw.text == "loop") {
      Instr in;
      in.op = kw.text == "block" ? Opcode::Block : Opcode::Loop;
      const auto label = block_label(form.items, i);
      in.block_result = block_type(form.items, i);
      ctx.labels.push_back(label);
      parse_sequence(form.items, i, in.body, ctx, false);
      ctx.labels.pop_back();
      out.push_back(std::move(in));
      return;
    }
    if (kw.text == "if") {
      Instr in;
      in.op = Opcode::If;
      const auto label = block_label(form.items, i);
      in.block_result = block_type(form.items, i);
      while (i < form.items.size() && !form.items[i].is_form("then")) {
        if (!form.items[i].is_list()) fail(form.items[i], "expected a folded condition or (then ...)");
        parse_folded(form.items[i], out, ctx);
        ++i;
      }
      if (i >= form.items.size()) fail(form, "missing (then ...) in if");
      ctx.labels.push_back(label);
      std::size_t j = 1;
      parse_sequence(form.items[i].items, j, in.body, ctx, false);
      ++i;
      if (i < form.items.size() && form.items[i].is_form("else")) {
        std::size_t k = 1;
        parse_sequence(form.items[i].items, k, in.else_body, ctx, false);
        ++i;
      }
      ctx.labels.pop_back();
      if (i != form.items.size()) fail(form.items[i], "unexpected item after if branches");
      out.push_back(std::move(in));
      return;
    }
    Instr in = parse_plain(kw, form.items, i, ctx, /*folded=*/true);
    for (; i < form.items.size(); ++i) {
      if (!form.items[i].is_list()) fail(form.items[i], "unexpected immediate '" + form.items[i].text + "'");
      parse_folded(form.items[i], out, ctx);
    }
    out.push_back(std::move(in));
  }

  static bool parse_memarg(const SExpr& s, MemArg& mem) {
    if (s.kind != SExpr::Kind::Keyword) return false;
    auto take = [&](std::string_view key, std::uint32_t& dst) {
      if (s.text.substr(0, key.size()) != key) return false;
      SExpr num = s;
      num.kind = SExpr::Kind::Number;
      num.text = s.text.substr(key.size());
      dst = parse_u32(num);
      return true;
    };
    return take("offset=", mem.offset) || take("align=", mem.align);
  }

  Instr parse_plain(const SExpr& kw, const std::vector<SExpr>& items, std::size_t& i, BodyContext& ctx, bool folded) {
    const std::string& name = kw.text;
    Instr in;
    auto next = [&](const char* what) -> const SExpr& {
      if (i >= items.size() || items[i].is_list()) fail(kw, std::string{"missing "} + what + " for " + name);
      return items[i++];
    };

    if (name == "unreachable") { in.op = Opcode::Unreachable; return in; }
    if (name == "nop") { in.op = Opcode::Nop; return in; }
    if (name == "return") { in.op = Opcode::Return; return in; }
    if (name == "drop") { in.op = Opcode::Drop; return in; }
    if (name == "select") {
      in.op = Opcode::Select;
      if (i < items.size() && items[i].is_form("result")) {
        const SExpr& r = items[i++];
        if (r.items.size() != 2) unsupported(r, "multi-value");
        value_type(r.items[1]);
      }
      return in;
    }
    if (name == "br" || name == "br_if") {
      in.op = name == "br" ? Opcode::Br : Opcode::BrIf;
      in.imm = resolve_label(next("label"), ctx);
      return in;
    }
    if (name == "call") {
      in.op = Opcode::Call;
      in.imm = resolve(next("function"), func_names_, "function");
      return in;
    }
    if (name == "call_indirect") {
      in.op = Opcode::CallIndirect;
      if (i < items.size() && !items[i].is_list()) {
        const SExpr& t = items[i++];
        if (!(t.kind == SExpr::Kind::Number && t.text == "0") && !(t.kind == SExpr::Kind::Id && t.text == table_name_))
          unsupported(t, "multiple tables");
      }
      TypeUse use = parse_typeuse_items(items, i);
      if (!use.index && !use.has_inline) fail(kw, "call_indirect requires a type use");
      FuncType ft;
      in.imm = resolve_typeuse(use, ft);
      return in;
    }
    if (name == "local.get" || name == "local.set" || name == "local.tee") {
      in.op = name == "local.get" ? Opcode::LocalGet : name == "local.set" ? Opcode::LocalSet : Opcode::LocalTee;
      in.imm = resolve(next("local"), ctx.locals, "local");
      return in;
    }
    if (name == "global.get" || name == "global.set") {
      in.op = name == "global.get" ? Opcode::GlobalGet : Opcode::GlobalSet;
      in.imm = resolve(next("global"), global_names_, "global");
      return in;
    }
    if (name == "memory.size" || name == "memory.grow") {
      in.op = name == "memory.size" ? Opcode::MemorySize : Opcode::MemoryGrow;
      if (i < items.size() && !items[i].is_list() &&
          (items[i].kind == SExpr::Kind::Number || items[i].kind == SExpr::Kind::Id)) {
        if (items[i].text != "0") unsupported(items[i], "multi-memory");
        ++i;
      }
      return in;
    }
    if (name.size() > 4 && (name.substr(0, 4) == "i32." || name.substr(0, 4) == "i64.")) {
      in.type = name[1] == '3' ? ValueType::I32 : ValueType::I64;
      const std::string_view op = std::string_view{name}.substr(4);
      if (op == "const") {
        in.op = Opcode::Const;
        in.imm = parse_const(next("constant"), in.type);
        return in;
      }
      for (int b = 0; b < 13; ++b) {
        if (op == binop_name(static_cast<BinOp>(b))) {
          in.op = Opcode::Binary;
          in.binop = static_cast<BinOp>(b);
          return in;
        }
      }
      for (int r = 0; r < 10; ++r) {
        if (op == relop_name(static_cast<RelOp>(r))) {
          in.op = Opcode::Compare;
          in.relop = static_cast<RelOp>(r);
          return in;
        }
      }
      if (op == "eqz") { in.op = Opcode::Eqz; return in; }
      if (name == "i32.wrap_i64") { in.op = Opcode::WrapI64; return in; }
      if (name == "i64.extend_i32_s") { in.op = Opcode::ExtendI32S; in.type = ValueType::I64; return in; }
      if (name == "i64.extend_i32_u") { in.op = Opcode::ExtendI32U; in.type = ValueType::I64; return in; }
      if (auto mem = memory_shape(in.type, op)) {
        in.op = mem->first;
        in.mem = mem->second;
        while (i < items.size() && !items[i].is_list() && parse_memarg(items[i], in.mem)) ++i;
        return in;
      }
    }
    if (auto feature = unsupported_feature(name)) unsupported(kw, *feature);
    (void)folded;
    throw ParseError(ParseError::Kind::UnknownOpcode, kw.line, kw.column, "unknown opcode '" + name + "'");
  }

  TypeUse parse_typeuse_items(const std::vector<SExpr>& items, std::size_t& i) {
    SExpr wrapper;
    wrapper.items.assign(items.begin() + static_cast<std::ptrdiff_t>(i), items.end());
    std::size_t j = 0;
    TypeUse use = parse_typeuse(wrapper, j, false);
    i += j;
    return use;
  }

  static std::optional<std::pair<Opcode, MemArg>> memory_shape(ValueType t, std::string_view op) {
    MemArg mem;
    const std::uint8_t full = t == ValueType::I32 ? 4 : 8;
    auto sized = [&](std::string_view base, Opcode code) -> std::optional<std::pair<Opcode, MemArg>> {
      if (op.substr(0, base.size()) != base) return std::nullopt;
      std::string_view rest = op.substr(base.size());
      if (rest.empty()) {
        mem.bytes = full;
        return std::pair{code, mem};
      }
      std::uint8_t bits = 0;
      if (rest.substr(0, 1) == "8") {
        bits = 8;
        rest.remove_prefix(1);
      } else if (rest.substr(0, 2) == "16") {
        bits = 16;
        rest.remove_prefix(2);
      } else if (rest.substr(0, 2) == "32" && t == ValueType::I64) {
        bits = 32;
        rest.remove_prefix(2);
      } else {
        return std::nullopt;
      }
      mem.bytes = bits / 8;
      if (code == Opcode::Load) {
        if (rest == "_s") mem.sign_extend = true;
        else if (rest != "_u") return std::nullopt;
      } else if (!rest.empty()) {
        return std::nullopt;
      }
      return std::pair{code, mem};
    };
    if (auto r = sized("load", Opcode::Load)) return r;
    return sized("store", Opcode::Store);
  }

  Module m_;
  std::map<std::string, std::uint32_t> func_names_;
  std::map<std::string, std::uint32_t> global_names_;
  std::map<std::string, std::uint32_t> type_names_;
  std::vector<PendingFunc> pending_funcs_;
  std::string table_name_;
  const SExpr* inline_elem_ = nullptr;
};

}  // namespace detail

/// Parses a module in Wasm text format (flat and folded instruction forms).
inline Module parse_module(std::string_view text) {
  const auto sexprs = read_sexprs(text);
  return detail::Elaborator{}.run(sexprs);
}

}  // namespace wasym::wat
