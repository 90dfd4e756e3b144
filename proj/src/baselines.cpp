#include "perfopt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "perfopt/soop.hpp"

namespace perfopt {

std::string to_string(FeedbackMode mode) {
  return mode == FeedbackMode::kFull ? "full" : "sampled";
}

FeedbackMode feedback_mode_from_string(const std::string& s) {
  if (s == "full") return FeedbackMode::kFull;
  if (s == "sampled") return FeedbackMode::kSampled;
  throw std::invalid_argument("unknown feedback mode: " + s);
}

// ---------------------------------------------------------------------------

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

// Feedback gathered at one deployed arm.
struct DeployedArm {
  std::size_t arm = 0;
  std::optional<DistributionHandle> handle;  // full feedback
  std::optional<SampleSet> pool;             // sampled feedback

  double estimate(std::span<const double> theta) const {
    return handle ? handle->dpr(theta) : pool->empirical_dpr(theta);
  }
  double slack() const {
    if (!pool) return 0.0;
    return 2.0 * pool->stddev() / std::sqrt(static_cast<double>(pool->size()));
  }
};

}  // namespace

ZoomingResult run_szooming(const Environment& env, std::size_t budget,
                           std::vector<Point> grid, const ZoomingOptions& options) {
  if (grid.empty()) throw std::invalid_argument("run_szooming: empty grid");
  if (options.lipschitz_z < 0.0 || options.epsilon < 0.0) {
    throw std::invalid_argument("run_szooming: L_z and epsilon must be nonnegative");
  }
  const bool sampled = options.mode == FeedbackMode::kSampled;
  const double scale = options.lipschitz_z * options.epsilon;

  Stopwatch clock;
  DrawStream stream(options.seed);
  std::vector<GridArm> arms;
  arms.reserve(grid.size());
  for (auto& p : grid) arms.push_back(GridArm{std::move(p)});

  std::vector<DeployedArm> deployed;
  std::map<std::size_t, std::size_t> slot_of;
  ZoomingResult result;

  for (std::size_t step = 1; step <= budget; ++step) {
    std::optional<std::size_t> pick;
    for (std::size_t a = 0; a < arms.size(); ++a) {
      if (arms[a].active && (!pick || arms[a].lower < arms[*pick].lower)) pick = a;
    }
    if (!pick) break;

    const std::size_t a = *pick;
    auto [it, fresh] = slot_of.try_emplace(a, deployed.size());
    if (fresh) {
      DeployedArm d;
      d.arm = a;
      if (sampled) {
        d.pool.emplace(env, arms[a].theta);
      } else {
        d.handle.emplace(env.deploy_full(arms[a].theta));
      }
      deployed.push_back(std::move(d));
    }
    DeployedArm& d = deployed[it->second];
    if (sampled) {
      d.pool->append(env.deploy_sample(arms[a].theta, options.m0, stream));
    } else if (!fresh) {
      d.handle.emplace(env.deploy_full(arms[a].theta));
    }
    ++arms[a].pulls;
    result.run.deployments.push_back(
        Deployment{arms[a].theta, -1, std::to_string(a), sampled ? options.m0 : 0});

    // Full recomputation of the performative confidence bounds.
    double min_upper = std::numeric_limits<double>::infinity();
    for (auto& arm : arms) {
      if (!arm.active) continue;
      double lo = -std::numeric_limits<double>::infinity();
      double hi = std::numeric_limits<double>::infinity();
      for (const auto& s : deployed) {
        const double est = s.estimate(arm.theta);
        const double w =
            scale * std::pow(distance(arms[s.arm].theta, arm.theta), options.alpha) +
            s.slack();
        lo = std::max(lo, est - w);
        hi = std::min(hi, est + w);
      }
      // Crossing only happens when the sampled slack is too optimistic;
      // collapse to the midpoint so that lower <= upper holds.
      if (lo > hi) lo = hi = 0.5 * (lo + hi);
      arm.lower = lo;
      arm.upper = hi;
      min_upper = std::min(min_upper, hi);
    }
    for (auto& arm : arms) {
      if (arm.active && arm.lower > min_upper) {
        arm.active = false;
        ++result.eliminated;
      }
    }
    if (options.on_step) options.on_step(step, arms);
  }

  std::optional<std::size_t> best;
  double best_value = 0.0;
  for (const auto& s : deployed) {
    const double v = s.estimate(arms[s.arm].theta);
    if (!best || v < best_value || (v == best_value && s.arm < *best)) {
      best = s.arm;
      best_value = v;
    }
  }
  if (best) {
    result.run.theta = arms[*best].theta;
    result.run.estimate = best_value;
  }
  result.run.seconds = clock.seconds();
  result.run.algorithm = sampled ? "szooming_sampled" : "szooming";
  result.run.budget = budget;
  result.arms = std::move(arms);
  return result;
}

// ---------------------------------------------------------------------------

namespace {

struct TreeNode {
  Cell cell;
  Point theta;
  bool expanded = false;
  double value = 0.0;  // SOO: PR(center)
  std::optional<SampleSet> pool;  // StoSOO
  std::size_t count = 0;
};

bool node_less(const TreeNode& a, double va, const TreeNode& b, double vb) {
  if (va != vb) return va < vb;
  return a.cell < b.cell;
}

}  // namespace

SooResult run_soo(const Environment& env, std::size_t budget, std::size_t depth_cap) {
  const std::size_t dim = env.domain().dim();
  if (depth_cap == 0) depth_cap = doop_hmax(budget, dim);

  Stopwatch clock;
  Budget spent(budget);
  SooResult result;
  result.depth_cap = depth_cap;
  std::vector<TreeNode> nodes;
  std::vector<std::vector<std::size_t>> leaves(depth_cap + 2);

  auto evaluate = [&](Cell cell) {
    Point theta = env.domain().from_offset(cell.center_offset());
    const double v = env.deploy_full(theta).dpr(theta);
    result.run.deployments.push_back(
        Deployment{theta, static_cast<long>(cell.depth()), cell.index_string(), 0});
    const std::size_t depth = cell.depth();
    leaves[depth].push_back(nodes.size());
    nodes.push_back(TreeNode{std::move(cell), std::move(theta), false, v, std::nullopt, 1});
  };

  if (spent.take()) evaluate(Cell::root(dim));

  for (std::size_t sweep = 0; !spent.exhausted(); ++sweep) {
    double v_min = std::numeric_limits<double>::infinity();
    bool expanded_any = false;
    for (std::size_t h = 0; h <= depth_cap && !spent.exhausted(); ++h) {
      std::optional<std::size_t> pick;
      for (std::size_t id : leaves[h]) {
        if (!pick || node_less(nodes[id], nodes[id].value, nodes[*pick], nodes[*pick].value)) {
          pick = id;
        }
      }
      if (!pick || nodes[*pick].value > v_min) continue;
      const std::size_t id = *pick;
      v_min = nodes[id].value;
      nodes[id].expanded = true;
      std::erase(leaves[h], id);
      result.expansions.push_back(SooExpansion{sweep, h, v_min});
      expanded_any = true;
      for (Cell& child : nodes[id].cell.children()) {
        if (!spent.take()) break;
        evaluate(std::move(child));
      }
    }
    if (!expanded_any) break;
  }

  std::size_t best = 0;
  for (std::size_t id = 1; id < nodes.size(); ++id) {
    if (node_less(nodes[id], nodes[id].value, nodes[best], nodes[best].value)) best = id;
  }
  if (!nodes.empty()) {
    result.run.theta = nodes[best].theta;
    result.run.estimate = nodes[best].value;
  }
  result.run.seconds = clock.seconds();
  result.run.algorithm = "soo";
  result.run.budget = budget;
  return result;
}

StoSooResult run_stosoo(const Environment& env, std::size_t budget,
                        const StoSooOptions& options) {
  const std::size_t dim = env.domain().dim();
  StoSooResult result;
  result.depth_cap = options.depth_cap ? options.depth_cap : doop_hmax(budget, dim);
  const std::size_t m0 = std::max<std::size_t>(options.m0, 1);
  result.evaluations = options.evaluations
                           ? options.evaluations
                           : (budget + m0 * result.depth_cap - 1) / (m0 * result.depth_cap);
  result.evaluations = std::max<std::size_t>(result.evaluations, 1);
  result.delta = options.delta > 0.0 ? options.delta
                                     : 1.0 / std::sqrt(static_cast<double>(budget));
  const std::size_t k = result.evaluations;
  const double log_term =
      std::log(static_cast<double>(budget) * static_cast<double>(k) / result.delta);

  Stopwatch clock;
  Budget spent(budget);
  DrawStream stream(options.seed);
  std::vector<TreeNode> nodes;
  std::vector<std::vector<std::size_t>> leaves(result.depth_cap + 2);

  auto add_leaf = [&](Cell cell) {
    Point theta = env.domain().from_offset(cell.center_offset());
    const std::size_t depth = cell.depth();
    leaves[depth].push_back(nodes.size());
    SampleSet pool(env, theta);
    nodes.push_back(TreeNode{std::move(cell), std::move(theta), false, 0.0, std::move(pool), 0});
  };
  auto lcb = [&](const TreeNode& n) {
    if (n.count == 0) return -std::numeric_limits<double>::infinity();
    return n.pool->empirical_dpr(n.theta) -
           std::sqrt(log_term / (2.0 * static_cast<double>(n.count)));
  };

  add_leaf(Cell::root(dim));
  while (!spent.exhausted()) {
    double v_min = std::numeric_limits<double>::infinity();
    bool acted = false;
    for (std::size_t h = 0; h <= result.depth_cap + 1 && !spent.exhausted(); ++h) {
      std::optional<std::size_t> pick;
      double pick_lcb = 0.0;
      for (std::size_t id : leaves[h]) {
        const double b = lcb(nodes[id]);
        if (!pick || node_less(nodes[id], b, nodes[*pick], pick_lcb)) {
          pick = id;
          pick_lcb = b;
        }
      }
      if (!pick) continue;
      TreeNode& node = nodes[*pick];
      if (node.count < k) {
        spent.take();
        node.pool->append(env.deploy_sample(node.theta, m0, stream));
        ++node.count;
        result.run.deployments.push_back(Deployment{
            node.theta, static_cast<long>(node.cell.depth()), node.cell.index_string(), m0});
        acted = true;
      } else if (h <= result.depth_cap && pick_lcb <= v_min) {
        v_min = pick_lcb;
        node.expanded = true;
        const std::size_t id = *pick;
        std::erase(leaves[h], id);
        for (Cell& child : nodes[id].cell.children()) add_leaf(std::move(child));
        acted = true;
      }
    }
    if (!acted) break;
  }

  // Best mean among fully evaluated nodes, else among the most evaluated.
  std::size_t most = 0;
  for (const auto& n : nodes) most = std::max(most, n.count);
  const std::size_t threshold = std::min(most, k);
  std::optional<std::size_t> best;
  double best_value = 0.0;
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    if (nodes[id].count == 0 || nodes[id].count < threshold) continue;
    const double v = nodes[id].pool->empirical_dpr(nodes[id].theta);
    if (!best || node_less(nodes[id], v, nodes[*best], best_value)) {
      best = id;
      best_value = v;
    }
  }
  if (best) {
    result.run.theta = nodes[*best].theta;
    result.run.estimate = best_value;
  }
  result.run.seconds = clock.seconds();
  result.run.algorithm = "stosoo";
  result.run.budget = budget;
  return result;
}

RunResult run_blackbox(const std::string& name, const Environment& env,
                       std::size_t budget, const BlackboxOptions& options) {
  if (name == "soo") return run_soo(env, budget).run;
  if (name == "stosoo") {
    StoSooOptions o = options.stosoo;
    o.m0 = options.m0;
    o.seed = options.seed;
    return run_stosoo(env, budget, o).run;
  }
  if (name == "sequool") {
    return run_doop(env, budget, TreeOptions{1, 0}, "sequool").run;
  }
  if (name == "stroquool") {
    return run_soop(env, budget, options.m0, options.seed, TreeOptions{1, 0}, "stroquool").run;
  }
  throw std::invalid_argument("unknown black-box optimizer: " + name);
}

}  // namespace perfopt
