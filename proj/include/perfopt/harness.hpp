#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "perfopt/baselines.hpp"
#include "perfopt/environment.hpp"
#include "perfopt/metrics.hpp"

namespace perfopt {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AlgorithmSpec {
  std::string name;             // doop | soop | soo | stosoo | sequool | stroquool | szooming
  std::size_t candidates = 9;   // tree algorithms with performative feedback
  std::size_t grid = 55;        // zooming grid points per axis
  double lipschitz_z = 1.0;
  std::optional<double> epsilon;  // zooming; absent = grid Lipschitz constant of the map
  double alpha = 1.0;

  bool operator==(const AlgorithmSpec&) const = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string environment = "ackley_exp_rastrigin";
  FeedbackMode mode = FeedbackMode::kFull;
  std::size_t budget = 500;
  std::size_t m0 = 10;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<AlgorithmSpec> algorithms;
  std::string output_dir = "runs";

  bool operator==(const ExperimentConfig&) const = default;
};

// JSON text. Unknown keys, unknown names and mode/algorithm mismatches throw
// ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& config);

// Algorithms whose budget sets the budget of the others in the same mode.
std::string reference_algorithm(FeedbackMode mode);
bool supports_mode(const std::string& algorithm, FeedbackMode mode);

struct RunOutcome {
  std::string algorithm;
  std::uint64_t seed = 0;
  std::size_t budget = 0;  // budget granted
  RunTrace trace;
  std::optional<double> epsilon;  // zooming only
};

// Runs one (algorithm, seed) pair. `budget` overrides config.budget.
RunOutcome run_single(const ExperimentConfig& config, const AlgorithmSpec& spec,
                      std::uint64_t seed, std::size_t budget);

// Grid Lipschitz constant of the environment's distribution map over an
// n-by-n grid (the zooming arms).
double map_epsilon(const AdditiveExpEnv& env, std::size_t grid);

// Writes `contents` to a sibling temp file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

std::size_t worker_count();  // PERFOPT_WORKERS, else hardware concurrency

// Subcommands. Return process exit codes: 0 ok, 2 invalid input,
// 3 budget too small.
int cli_run(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);
int cli_analyze(const std::filesystem::path& run_dir, std::ostream& out, std::ostream& err);
int cli_oracle(const std::string& env_name, std::size_t resolution, std::ostream& out,
               std::ostream& err);

}  // namespace perfopt
