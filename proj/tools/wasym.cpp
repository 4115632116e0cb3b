#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "wasym/cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace wasym;
  CLI::App app{"Symbolic execution for WebAssembly text modules"};
  app.require_subcommand(1);

  cli::Options opt;
  opt.run.workers = std::max(1u, std::thread::hardware_concurrency());
  std::string file;
  std::string solver_cmd = opt.run.solver.command;
  std::string backend = "auto";
  bool no_incremental = false;

  auto* run = app.add_subcommand("run", "Execute main concretely");
  run->add_option("file", file, "Module in text format")->required();
  run->add_option("--fuel", opt.run.fuel, "Instruction budget")->check(CLI::PositiveNumber);

  auto* sym = app.add_subcommand("sym", "Explore every path of main symbolically");
  sym->add_option("file", file, "Module in text format")->required();
  sym->add_option("-w,--workers", opt.run.workers, "Worker threads")->check(CLI::PositiveNumber);
  sym->add_option("--fuel", opt.run.fuel, "Instruction budget per path")->check(CLI::PositiveNumber);
  sym->add_option("--timeout", opt.run.timeout_s, "Wall-clock limit in seconds (0: none)")->check(CLI::NonNegativeNumber);
  sym->add_option("--solver", solver_cmd, "SMT-LIB2 solver command reading from standard input");
  sym->add_option("--solver-timeout", opt.run.solver.timeout_s, "Per-query limit in seconds (0: none)")
      ->check(CLI::NonNegativeNumber);
  sym->add_option("--backend", backend, "auto, external or brute-force")
      ->check(CLI::IsMember({"auto", "external", "brute-force"}));
  sym->add_flag("--no-incremental", no_incremental, "Re-assert the whole path condition for every query");
  sym->add_flag("--fail-fast", opt.run.fail_fast, "Stop at the first finding");
  sym->add_flag("--fail-on-assertion-only", opt.assertion_only, "Report assertion failures only");
  sym->add_flag("--stats", opt.stats, "Print statistics on standard error");
  sym->add_flag("--deterministic", opt.run.deterministic, "One worker and no periodic yields");

  auto* replay = app.add_subcommand("replay", "Execute main with symbols taken from a model");
  replay->add_option("file", file, "Module in text format")->required();
  replay->add_option("--model", opt.model_file, "Model as printed by sym")->required();
  replay->add_option("--fuel", opt.run.fuel, "Instruction budget")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kExitConfigError;
  }

  opt.run.solver.command = solver_cmd;
  opt.run.solver.incremental = !no_incremental;
  if (backend == "external") opt.run.solver.backend = solver::Backend::External;
  if (backend == "brute-force") opt.run.solver.backend = solver::Backend::BruteForce;

  if (*run) return cli::cmd_run(file, opt, std::cout, std::cerr);
  if (*replay) return cli::cmd_replay(file, opt, std::cout, std::cerr);
  return cli::cmd_sym(file, opt, std::cout, std::cerr);
}
