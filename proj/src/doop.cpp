#include "perfopt/doop.hpp"

#include <algorithm>
#include <stdexcept>

namespace perfopt {

std::size_t doop_hmax(std::size_t budget, std::size_t dim) {
  if (budget < 2) throw BudgetTooSmall("doop_hmax: budget must be at least 2");
  double harmonic = 0.0;
  for (std::size_t t = 1; t <= budget; ++t) harmonic += 1.0 / static_cast<double>(t);
  const double denom = static_cast<double>(std::size_t{1} << dim) * harmonic;
  const auto h = static_cast<std::size_t>(static_cast<double>(budget) / denom);
  if (h == 0) {
    throw BudgetTooSmall("doop_hmax: budget " + std::to_string(budget) +
                         " gives h_max = 0 in dimension " + std::to_string(dim));
  }
  return h;
}

FullFeedbackTree::FullFeedbackTree(const Environment& env, std::size_t budget,
                                   TreeOptions options)
    : env_(&env), budget_(budget), options_(options) {
  if (options_.candidates == 0) throw std::invalid_argument("candidates must be >= 1");
}

const std::vector<std::size_t>& FullFeedbackTree::layer(std::size_t depth) const {
  static const std::vector<std::size_t> kEmpty;
  return depth < layers_.size() ? layers_[depth] : kEmpty;
}

bool FullFeedbackTree::better(std::size_t a, std::size_t b) const {
  const auto& x = cells_[a];
  const auto& y = cells_[b];
  if (x.risk != y.risk) return x.risk < y.risk;
  return x.cell < y.cell;
}

std::size_t FullFeedbackTree::add(Cell cell, Point offset,
                                  std::optional<std::size_t> parent) {
  Point theta = env_->domain().from_offset(offset);
  DistributionHandle handle = env_->deploy_full(theta);
  const double risk = handle.dpr(theta);
  log_.push_back(Deployment{theta, static_cast<long>(cell.depth()), cell.index_string(), 0});

  const std::size_t depth = cell.depth();
  const std::size_t id = cells_.size();
  cells_.push_back(FullCellRecord{std::move(cell), std::move(offset), std::move(theta),
                                  std::move(handle), risk, false, parent});
  if (layers_.size() <= depth) layers_.resize(depth + 1);
  layers_[depth].push_back(id);
  return id;
}

bool FullFeedbackTree::deploy_root() {
  if (!cells_.empty()) throw std::logic_error("root already deployed");
  if (!budget_.take()) return false;
  Cell root = Cell::root(env_->domain().dim());
  Point center = root.center_offset();
  add(std::move(root), std::move(center), std::nullopt);
  return true;
}

std::size_t FullFeedbackTree::open(std::size_t id) {
  if (id >= cells_.size()) throw std::out_of_range("open: unknown cell");
  if (cells_[id].opened) throw std::logic_error("open: cell already opened");
  cells_[id].opened = true;
  ++openings_;

  std::size_t deployed = 0;
  for (Cell& child : cells_[id].cell.children()) {
    if (budget_.exhausted()) break;
    // Representative: candidate minimizing DPR under the parent's
    // distribution; ties keep the earliest candidate.
    Point best;
    double best_value = 0.0;
    for (auto& c : candidate_offsets(child, options_.candidates, options_.salt)) {
      const double v = cells_[id].handle.dpr(env_->domain().from_offset(c));
      if (best.empty() || v < best_value) {
        best_value = v;
        best = std::move(c);
      }
    }
    budget_.take();
    add(std::move(child), std::move(best), id);
    ++deployed;
  }
  return deployed;
}

DoopResult run_doop(const Environment& env, std::size_t budget,
                    const TreeOptions& options, const std::string& label) {
  const std::size_t dim = env.domain().dim();
  const std::size_t h_max = doop_hmax(budget, dim);

  Stopwatch clock;
  FullFeedbackTree tree(env, budget, options);
  if (tree.deploy_root()) {
    tree.open(0);
    for (std::size_t h = 1; h <= h_max && !tree.budget().exhausted(); ++h) {
      std::vector<std::size_t> ids = tree.layer(h);
      std::sort(ids.begin(), ids.end(),
                [&tree](std::size_t a, std::size_t b) { return tree.better(a, b); });
      const std::size_t quota = std::min(h_max / h, ids.size());
      for (std::size_t j = 0; j < quota && !tree.budget().exhausted(); ++j) {
        tree.open(ids[j]);
      }
    }
  }

  DoopResult result;
  result.h_max = h_max;
  result.openings = tree.openings();
  std::size_t best = 0;
  for (std::size_t id = 1; id < tree.cells().size(); ++id) {
    if (tree.better(id, best)) best = id;
  }
  if (!tree.cells().empty()) {
    result.run.theta = tree.cells()[best].theta;
    result.run.estimate = tree.cells()[best].risk;
  }
  result.run.seconds = clock.seconds();
  result.run.algorithm = label;
  result.run.budget = budget;
  result.run.deployments = tree.log();
  result.cells = tree.cells();
  return result;
}

}  // namespace perfopt
