#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace cvxint::cli;
  CLI::App app{"cvxint: convex integration constructions under a linear constraint"};
  app.require_subcommand(1);
  std::string config, out = ".";
  std::optional<unsigned long> seed;
  std::optional<std::size_t> threads;
  app.add_option("--config", config, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "seed overriding [run] seed");
  app.add_option("--threads", threads, "worker threads overriding [run] threads")->check(CLI::PositiveNumber);
  const std::map<std::string, std::string> help{
      {"hull", "discrete lamination hull of a finite matrix set"},
      {"envelope", "separately convex envelope on a diagonal lattice"},
      {"laminate", "build a laminate from splits and run Jensen checks"},
      {"patch", "sample one oscillation patch and check its properties"},
      {"eikonal", "solve the constrained eikonal inclusion"},
      {"t4", "solve the T4 inclusion with staircase laminates"},
      {"report", "summarize *_report.json files in the output directory"},
  };
  for (const std::string& name : command_names()) app.add_subcommand(name, help.at(name))->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  RunOptions opt;
  if (!config.empty()) opt.config_path = config;
  opt.out_dir = out;
  opt.seed = seed;
  opt.threads = threads;
  return run_command(app.get_subcommands().front()->get_name(), opt, std::cout, std::cerr);
}
