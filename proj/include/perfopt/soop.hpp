#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "perfopt/doop.hpp"
#include "perfopt/environment.hpp"
#include "perfopt/partition.hpp"
#include "perfopt/run.hpp"

namespace perfopt {

struct SoopBudgets {
  std::size_t h_max = 0;
  std::size_t p_max = 0;
};

// h_max = floor(T / (2^(D+1) (log2 T + 1)^2)), p_max = floor(log2 h_max).
// Throws BudgetTooSmall when h_max = 0.
SoopBudgets soop_budgets(std::size_t budget, std::size_t dim);

struct SampledCellRecord {
  Cell cell;
  Point offset;
  Point theta;
  SampleSet samples;
  std::size_t n_deploy = 0;
  std::size_t n_open = 0;
  double empirical_risk = 0.0;  // empirical DPR(theta, theta) from own pool
  std::optional<std::size_t> parent;
  std::vector<std::size_t> children;
};

// Search tree with sampled (data-driven) performative feedback. Each
// deployment draws m0 samples which are pooled in the deployed cell.
class SampledFeedbackTree {
 public:
  SampledFeedbackTree(const Environment& env, std::size_t budget, std::size_t m0,
                      TreeOptions options, DrawStream& stream);

  // Deploys the root center `n` times.
  void deploy_root(std::size_t n);

  // Open(P, n). First opening: sets n_open = n, picks each child's
  // representative by minimizing the parent's empirical DPR over the
  // candidates and deploys it n times. Reopening with a larger n tops every
  // existing child up to n deployments and keeps its representative.
  // Stops early when the budget runs out.
  void open(std::size_t id, std::size_t n);

  // Deploys cells_[id] `n` times into a fresh pool (validation); returns the
  // pool, possibly short if the budget ran out.
  SampleSet validate(std::size_t id, std::size_t n);

  const std::vector<SampledCellRecord>& cells() const { return cells_; }
  const std::vector<std::size_t>& layer(std::size_t depth) const;
  std::size_t depth_count() const { return layers_.size(); }

  const Budget& budget() const { return budget_; }
  const std::vector<Deployment>& log() const { return log_; }
  std::size_t m0() const { return m0_; }

  // (empirical risk, depth, index) order.
  bool better(std::size_t a, std::size_t b) const;

 private:
  std::size_t add(Cell cell, Point offset, std::optional<std::size_t> parent);
  // Deploys cells_[id] up to `count` more times; returns deployments made.
  std::size_t deploy(std::size_t id, std::size_t count);

  const Environment* env_;
  Budget budget_;
  std::size_t m0_;
  TreeOptions options_;
  DrawStream* stream_;
  std::vector<SampledCellRecord> cells_;
  std::vector<std::vector<std::size_t>> layers_;
  std::vector<Deployment> log_;
};

struct ValidationRound {
  std::size_t p = 0;
  std::size_t cell = 0;  // record id
  std::size_t deployments = 0;
  double estimate = 0.0;
};

struct SoopResult {
  RunResult run;
  SoopBudgets budgets;
  std::size_t init_deployments = 0;
  std::size_t exploration_deployments = 0;
  std::size_t validation_deployments = 0;
  bool cross_validated = false;
  std::vector<ValidationRound> validation;
  std::vector<SampledCellRecord> cells;
};

// Stochastic optimistic optimization with performative feedback: init,
// depth-major exploration with p-descending open counts, then
// cross-validation of the best cell per p on fresh deployments.
SoopResult run_soop(const Environment& env, std::size_t budget, std::size_t m0,
                    std::uint64_t seed, const TreeOptions& options = {},
                    const std::string& label = "soop");

}  // namespace perfopt
