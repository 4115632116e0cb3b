#pragma once

#include <cstdio>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>

#include "wasym/engine/scheduler.hpp"
#include "wasym/interp/run.hpp"
#include "wasym/solver/model.hpp"
#include "wasym/wat/load.hpp"

namespace wasym::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitLoadError = 1,
  kExitConfigError = 2,
  kExitInternalError = 3,
  kExitProblem = 13,
};

struct Options {
  interp::RunConfig run;
  bool assertion_only = false;
  bool stats = false;
  std::string model_file;
};

/// The report block for one finding.
inline std::string render_finding(const interp::Leaf& leaf) {
  std::string out = leaf.kind == interp::LeafKind::Trap ? "Trap: " + leaf.message + "\n"
                                                        : "Assert failure: " + leaf.message + "\n";
  return out + solver::render_model(leaf.model);
}

/// Serializes finding blocks written by concurrent workers.
class ReportSink {
 public:
  ReportSink(std::ostream& out, bool assertion_only) : out_(out), assertion_only_(assertion_only) {}

  /// True when the leaf was printed as a finding.
  bool offer(const interp::Leaf& leaf) {
    if (!leaf.is_finding()) return false;
    if (assertion_only_ && leaf.kind != interp::LeafKind::AssertFailure) return false;
    const std::string block = render_finding(leaf);
    std::lock_guard lock(mu_);
    out_ << block << std::flush;
    ++printed_;
    return true;
  }

  std::size_t printed() const {
    std::lock_guard lock(mu_);
    return printed_;
  }

 private:
  std::ostream& out_;
  bool assertion_only_;
  mutable std::mutex mu_;
  std::size_t printed_ = 0;
};

inline void print_stats(std::ostream& err, const interp::SymbolicStats& s) {
  err << "paths: " << s.paths << " (ok " << s.ok << ", findings " << s.findings << ", incomplete " << s.incomplete
      << ", pruned " << s.pruned << ")\n"
      << "solver: " << s.backend << ", queries " << s.solver_queries << ", address concretizations "
      << s.concretizations << "\n"
      << "scheduler: workers " << s.workers << ", steps " << s.steps << ", forks " << s.forks << ", yields "
      << s.yields << "\n"
      << "time: " << std::fixed << std::setprecision(3) << s.seconds << " s";
  if (s.timed_out) err << " (timeout reached, exploration incomplete)";
  if (s.stopped_early) err << " (stopped at first finding)";
  err << '\n';
}

namespace detail {

/// Maps every failure class to its exit code and prints a diagnostic.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const wat::FileError& e) {
    err << "error: " << e.what() << '\n';
    return kExitLoadError;
  } catch (const wat::ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitLoadError;
  } catch (const wat::ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitLoadError;
  } catch (const wat::LinkError& e) {
    err << "link error: " << e.what() << '\n';
    return kExitLoadError;
  } catch (const interp::ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const solver::ModelFormatError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const engine::InternalEngineError& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternalError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternalError;
  }
}

inline int report_concrete(std::ostream& out, const interp::Outcome<values::ConcreteValue>& o) {
  using interp::OutcomeKind;
  switch (o.kind) {
    case OutcomeKind::Returned:
    case OutcomeKind::Abandoned: out << "All OK\n"; return kExitOk;
    case OutcomeKind::AssumptionFailed:
      out << "Assumption violated\nAll OK\n";
      return kExitOk;
    case OutcomeKind::Trapped: out << "Trap: " << trap_message(o.trap) << '\n'; break;
    case OutcomeKind::AssertFailed:
      out << "Assert failure: " << interp::ConcreteValues::render_condition(o.condition) << '\n';
      break;
  }
  out << "Reached problem!\n";
  return kExitProblem;
}

}  // namespace detail

inline int cmd_run(const std::string& file, const Options& opt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto inst = wat::load_file(file);
    const auto r = interp::run_concrete(inst, opt.run.fuel);
    return detail::report_concrete(out, r.outcome);
  });
}

inline int cmd_replay(const std::string& file, const Options& opt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto inst = wat::load_file(file);
    std::string text;
    try {
      text = wat::read_file(opt.model_file);
    } catch (const wat::FileError& e) {
      throw interp::ConfigError(e.what());
    }
    const solver::Model model = solver::parse_model(text);
    const auto r = interp::run_concrete(inst, opt.run.fuel, &model);
    return detail::report_concrete(out, r.outcome);
  });
}

inline int cmd_sym(const std::string& file, const Options& opt, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto inst = wat::load_file(file);
    interp::RunConfig cfg = opt.run;
    if (cfg.solver.backend == solver::Backend::External && !solver::command_available(cfg.solver.command))
      throw interp::ConfigError("solver command not found: " + cfg.solver.command);
    if (!cfg.warn) cfg.warn = [&err](const std::string& w) { err << "warning: " << w << '\n'; };
    ReportSink sink(out, opt.assertion_only);
    const auto stats = interp::run_symbolic(inst, cfg, [&](interp::Leaf&& leaf) {
      return sink.offer(leaf) && cfg.fail_fast;
    });
    if (opt.stats) print_stats(err, stats);
    if (stats.incomplete > 0)
      err << "warning: " << stats.incomplete << " path(s) left unexplored (fuel, solver or timeout limits)\n";
    if (stats.timed_out) err << "warning: timeout reached before exploration finished\n";
    if (sink.printed() > 0) {
      out << "Reached problem!\n";
      return kExitProblem;
    }
    out << "All OK\n";
    return kExitOk;
  });
}

}  // namespace wasym::cli
