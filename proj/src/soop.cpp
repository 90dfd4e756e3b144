#include "perfopt/soop.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace perfopt {

SoopBudgets soop_budgets(std::size_t budget, std::size_t dim) {
  if (budget < 2) throw BudgetTooSmall("soop_budgets: budget must be at least 2");
  const double t = static_cast<double>(budget);
  const double lg = std::log2(t) + 1.0;
  const double denom = std::ldexp(lg * lg, static_cast<int>(dim) + 1);
  const auto h_max = static_cast<std::size_t>(t / denom);
  if (h_max == 0) {
    throw BudgetTooSmall("soop_budgets: budget " + std::to_string(budget) +
                         " gives h_max = 0 in dimension " + std::to_string(dim));
  }
  std::size_t p_max = 0;
  while ((std::size_t{2} << p_max) <= h_max) ++p_max;
  return {h_max, p_max};
}

SampledFeedbackTree::SampledFeedbackTree(const Environment& env, std::size_t budget,
                                         std::size_t m0, TreeOptions options,
                                         DrawStream& stream)
    : env_(&env), budget_(budget), m0_(m0), options_(options), stream_(&stream) {
  if (m0_ == 0) throw std::invalid_argument("m0 must be positive");
  if (options_.candidates == 0) throw std::invalid_argument("candidates must be >= 1");
}

const std::vector<std::size_t>& SampledFeedbackTree::layer(std::size_t depth) const {
  static const std::vector<std::size_t> kEmpty;
  return depth < layers_.size() ? layers_[depth] : kEmpty;
}

bool SampledFeedbackTree::better(std::size_t a, std::size_t b) const {
  const auto& x = cells_[a];
  const auto& y = cells_[b];
  if (x.empirical_risk != y.empirical_risk) return x.empirical_risk < y.empirical_risk;
  return x.cell < y.cell;
}

std::size_t SampledFeedbackTree::add(Cell cell, Point offset,
                                     std::optional<std::size_t> parent) {
  Point theta = env_->domain().from_offset(offset);
  SampleSet pool(*env_, theta);
  const std::size_t id = cells_.size();
  const std::size_t depth = cell.depth();
  cells_.push_back(SampledCellRecord{std::move(cell), std::move(offset), std::move(theta),
                                     std::move(pool), 0, 0, 0.0, parent, {}});
  if (layers_.size() <= depth) layers_.resize(depth + 1);
  layers_[depth].push_back(id);
  return id;
}

std::size_t SampledFeedbackTree::deploy(std::size_t id, std::size_t count) {
  std::size_t done = 0;
  auto& rec = cells_[id];
  const std::string index = rec.cell.index_string();
  for (; done < count && budget_.take(); ++done) {
    rec.samples.append(env_->deploy_sample(rec.theta, m0_, *stream_));
    log_.push_back(Deployment{rec.theta, static_cast<long>(rec.cell.depth()), index, m0_});
  }
  rec.n_deploy += done;
  if (done > 0) rec.empirical_risk = rec.samples.empirical_dpr(rec.theta);
  return done;
}

void SampledFeedbackTree::deploy_root(std::size_t n) {
  if (!cells_.empty()) throw std::logic_error("root already deployed");
  Cell root = Cell::root(env_->domain().dim());
  Point center = root.center_offset();
  const std::size_t id = add(std::move(root), std::move(center), std::nullopt);
  deploy(id, n);
}

void SampledFeedbackTree::open(std::size_t id, std::size_t n) {
  if (id >= cells_.size()) throw std::out_of_range("open: unknown cell");
  if (cells_[id].samples.empty()) throw std::logic_error("open: cell has no samples");
  if (n == 0) throw std::invalid_argument("open: n must be positive");

  if (cells_[id].n_open > 0) {
    if (n <= cells_[id].n_open) return;
    cells_[id].n_open = n;
    const auto kids = cells_[id].children;
    for (std::size_t child : kids) {
      if (cells_[child].n_deploy < n) deploy(child, n - cells_[child].n_deploy);
    }
    return;
  }

  cells_[id].n_open = n;
  for (Cell& child : cells_[id].cell.children()) {
    if (budget_.exhausted()) break;
    Point best;
    double best_value = 0.0;
    for (auto& c : candidate_offsets(child, options_.candidates, options_.salt)) {
      const double v = cells_[id].samples.empirical_dpr(env_->domain().from_offset(c));
      if (best.empty() || v < best_value) {
        best_value = v;
        best = std::move(c);
      }
    }
    const std::size_t cid = add(std::move(child), std::move(best), id);
    cells_[id].children.push_back(cid);
    deploy(cid, n);
  }
}

SampleSet SampledFeedbackTree::validate(std::size_t id, std::size_t n) {
  const auto& rec = cells_[id];
  SampleSet pool(*env_, rec.theta);
  const std::string index = rec.cell.index_string();
  for (std::size_t j = 0; j < n && budget_.take(); ++j) {
    pool.append(env_->deploy_sample(rec.theta, m0_, *stream_));
    log_.push_back(Deployment{rec.theta, static_cast<long>(rec.cell.depth()), index, m0_});
  }
  return pool;
}

SoopResult run_soop(const Environment& env, std::size_t budget, std::size_t m0,
                    std::uint64_t seed, const TreeOptions& options,
                    const std::string& label) {
  const std::size_t dim = env.domain().dim();
  const SoopBudgets b = soop_budgets(budget, dim);
  const std::size_t h_max = b.h_max;

  Stopwatch clock;
  DrawStream stream(seed);
  SampledFeedbackTree tree(env, budget, m0, options, stream);
  SoopResult result;
  result.budgets = b;

  tree.deploy_root(h_max);
  result.init_deployments = tree.budget().used();

  if (!tree.budget().exhausted()) tree.open(0, h_max);
  for (std::size_t h = 1; h <= h_max && !tree.budget().exhausted(); ++h) {
    std::size_t p = 0;
    while ((std::size_t{2} << p) * h <= h_max) ++p;  // floor(log2(h_max / h))
    for (std::size_t pass = p + 1; pass-- > 0 && !tree.budget().exhausted();) {
      const std::size_t n = std::size_t{1} << pass;
      std::vector<std::size_t> eligible;
      for (std::size_t id : tree.layer(h)) {
        const auto& rec = tree.cells()[id];
        if (rec.n_open == 0 && rec.n_deploy >= n) eligible.push_back(id);
      }
      std::sort(eligible.begin(), eligible.end(),
                [&tree](std::size_t x, std::size_t y) { return tree.better(x, y); });
      const std::size_t quota = std::min(h_max / (h * n), eligible.size());
      for (std::size_t j = 0; j < quota && !tree.budget().exhausted(); ++j) {
        tree.open(eligible[j], n);
      }
    }
  }
  result.exploration_deployments = tree.budget().used() - result.init_deployments;

  const auto& cells = tree.cells();
  std::size_t chosen = 0;
  if (!tree.budget().exhausted()) {
    for (std::size_t p = 0; p <= b.p_max; ++p) {
      const std::size_t n = std::size_t{1} << p;
      std::optional<std::size_t> pick;
      for (std::size_t id = 0; id < cells.size(); ++id) {
        if (cells[id].n_deploy >= n && (!pick || tree.better(id, *pick))) pick = id;
      }
      if (!pick) continue;
      const std::size_t before = tree.budget().used();
      SampleSet pool = tree.validate(*pick, h_max);
      const std::size_t used = tree.budget().used() - before;
      result.validation_deployments += used;
      if (pool.empty()) break;
      result.validation.push_back(ValidationRound{p, *pick, used, pool.empirical_dpr(cells[*pick].theta)});
    }
  }

  if (!result.validation.empty()) {
    result.cross_validated = true;
    const ValidationRound* best = &result.validation.front();
    for (const auto& round : result.validation) {
      if (round.estimate < best->estimate) best = &round;
    }
    chosen = best->cell;
    result.run.estimate = best->estimate;
  } else {
    // Ran dry before cross-validation: best empirical risk among the most
    // deployed cells.
    std::size_t most = 0;
    for (const auto& rec : cells) most = std::max(most, rec.n_deploy);
    std::optional<std::size_t> pick;
    for (std::size_t id = 0; id < cells.size(); ++id) {
      if (cells[id].n_deploy == most && (!pick || tree.better(id, *pick))) pick = id;
    }
    chosen = pick.value_or(0);
    result.run.estimate = cells[chosen].empirical_risk;
  }
  result.run.theta = cells[chosen].theta;
  result.run.seconds = clock.seconds();
  result.run.algorithm = label;
  result.run.budget = budget;
  result.run.deployments = tree.log();
  result.cells = cells;
  return result;
}

}  // namespace perfopt
