#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wasym::test_support {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// A scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "wasym-test-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path file(const std::string& name, const std::string& content) const {
    const auto p = path_ / name;
    std::ofstream(p) << content;
    return p;
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Runs the built CLI with `args` (already shell-quoted), capturing both streams.
inline CliResult run_cli(const std::string& args) {
  TempDir scratch;
  const auto out = scratch.path() / "out";
  const auto err = scratch.path() / "err";
  const std::string cmd =
      std::string("'") + WASYM_CLI_PATH + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

struct Finding {
  std::string header;  // "Trap: ..." or "Assert failure: ..."
  std::string model;   // the "Model:" block that follows
};

/// Splits a sym report into its finding blocks.
inline std::vector<Finding> split_findings(const std::string& report) {
  std::vector<Finding> out;
  std::istringstream in(report);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("Trap: ", 0) == 0 || line.rfind("Assert failure: ", 0) == 0) {
      out.push_back({line, ""});
    } else if (!out.empty() && line != "Reached problem!" && line != "All OK") {
      out.back().model += line + "\n";
    }
  }
  return out;
}

inline std::string quoted(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

}  // namespace wasym::test_support
