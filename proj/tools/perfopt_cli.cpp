#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "perfopt/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Performative risk minimization benchmarks"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run every (algorithm, seed) pair of a config");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();

  std::string run_dir;
  auto* analyze = app.add_subcommand("analyze", "Theory report for a finished run directory");
  analyze->add_option("dir", run_dir, "Output directory of a previous run")->required();

  std::string env_name;
  std::size_t resolution = 101;
  std::string output;
  auto* oracle = app.add_subcommand("oracle", "Dump the performative risk on a dense grid");
  oracle->add_option("env", env_name, "Environment name")->required();
  oracle->add_option("-n,--resolution", resolution, "Grid points per axis");
  oracle->add_option("-o,--output", output, "CSV file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*run) return perfopt::cli_run(config_path, std::cout, std::cerr);
  if (*analyze) return perfopt::cli_analyze(run_dir, std::cout, std::cerr);
  if (output.empty()) return perfopt::cli_oracle(env_name, resolution, std::cout, std::cerr);
  std::ofstream out(output);
  if (!out) {
    std::cerr << "cannot write " << output << "\n";
    return 2;
  }
  return perfopt::cli_oracle(env_name, resolution, out, std::cerr);
}
