#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perfopt/environment.hpp"
#include "perfopt/partition.hpp"
#include "perfopt/run.hpp"

namespace perfopt {

struct TreeOptions {
  // Points searched per cell when choosing a representative; 1 = center only.
  std::size_t candidates = 9;
  std::uint64_t salt = 0;
};

// floor(T / (2^D H_T)) with H_T the T-th harmonic number.
// Throws BudgetTooSmall when the result is 0.
std::size_t doop_hmax(std::size_t budget, std::size_t dim);

struct FullCellRecord {
  Cell cell;
  Point offset;  // representative, center-offset coordinates
  Point theta;   // representative, domain coordinates
  DistributionHandle handle;
  double risk = 0.0;  // PR(theta), read from its own handle
  bool opened = false;
  std::optional<std::size_t> parent;
};

// Search tree with full performative feedback. A child's representative is
// the candidate minimizing DPR(parent representative, .).
class FullFeedbackTree {
 public:
  FullFeedbackTree(const Environment& env, std::size_t budget, TreeOptions options);

  // Deploys the root center. Returns false if the budget is empty.
  bool deploy_root();

  // Opens cells_[id]: deploys one representative per child. Stops early if
  // the budget runs out; children deployed so far are kept. Returns the
  // number of children deployed.
  std::size_t open(std::size_t id);

  const std::vector<FullCellRecord>& cells() const { return cells_; }
  // Record ids at `depth` in insertion order.
  const std::vector<std::size_t>& layer(std::size_t depth) const;
  std::size_t depth_count() const { return layers_.size(); }

  const Budget& budget() const { return budget_; }
  std::size_t openings() const { return openings_; }
  const std::vector<Deployment>& log() const { return log_; }
  const TreeOptions& options() const { return options_; }

  // (risk, depth, index) order.
  bool better(std::size_t a, std::size_t b) const;

 private:
  std::size_t add(Cell cell, Point offset, std::optional<std::size_t> parent);

  const Environment* env_;
  Budget budget_;
  TreeOptions options_;
  std::vector<FullCellRecord> cells_;
  std::vector<std::vector<std::size_t>> layers_;
  std::vector<Deployment> log_;
  std::size_t openings_ = 0;
};

struct DoopResult {
  RunResult run;
  std::size_t h_max = 0;
  std::size_t openings = 0;
  std::vector<FullCellRecord> cells;
};

// Deterministic optimistic optimization with performative feedback.
// Opens the root, then for h = 1..h_max the floor(h_max/h) best depth-h
// cells; returns the best representative deployed. Never exceeds `budget`
// deployments.
DoopResult run_doop(const Environment& env, std::size_t budget,
                    const TreeOptions& options = {},
                    const std::string& label = "doop");

}  // namespace perfopt
