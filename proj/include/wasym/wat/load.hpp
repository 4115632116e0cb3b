#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "wasym/wat/link.hpp"
#include "wasym/wat/parser.hpp"
#include "wasym/wat/validator.hpp"

namespace wasym::wat {

class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// parse, validate and link in one go.
inline Instance load_text(std::string_view text) { return link(validate(parse_module(text))); }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Instance load_file(const std::string& path) { return load_text(read_file(path)); }

}  // namespace wasym::wat
