#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perfopt/doop.hpp"
#include "perfopt/environment.hpp"
#include "perfopt/run.hpp"

namespace perfopt {

enum class FeedbackMode { kFull, kSampled };

std::string to_string(FeedbackMode mode);
FeedbackMode feedback_mode_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// Performative-confidence-bound zooming over a finite grid.

struct GridArm {
  Point theta;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  bool active = true;
  std::size_t pulls = 0;
};

struct ZoomingOptions {
  double lipschitz_z = 1.0;  // L_z
  double epsilon = 0.0;      // sensitivity
  double alpha = 1.0;
  FeedbackMode mode = FeedbackMode::kFull;
  std::size_t m0 = 10;
  std::uint64_t seed = 0;
  // Called after every bound update with the step number (1-based).
  std::function<void(std::size_t, std::span<const GridArm>)> on_step;
};

struct ZoomingResult {
  RunResult run;
  std::vector<GridArm> arms;  // final state
  std::size_t eliminated = 0;
};

// Each step deploys the active arm with the smallest lower bound (ties: lowest
// grid index), recomputes every active arm's bounds from all deployed arms
//   max_s {DPR(s, a) - w(s, a)} <= PR(a) <= min_s {DPR(s, a) + w(s, a)},
//   w(s, a) = L_z eps |s - a|^alpha (+ 2 std_s / sqrt(n_s) when sampled),
// and eliminates arms whose lower bound exceeds the smallest active upper
// bound. Returns the deployed arm with the smallest PR estimate.
ZoomingResult run_szooming(const Environment& env, std::size_t budget,
                           std::vector<Point> grid, const ZoomingOptions& options);

// ---------------------------------------------------------------------------
// Black-box optimistic optimizers. Cells are represented by their centers.

struct SooExpansion {
  std::size_t sweep = 0;
  std::size_t depth = 0;
  double value = 0.0;
};

struct SooResult {
  RunResult run;
  std::size_t depth_cap = 0;
  std::vector<SooExpansion> expansions;
};

// SOO: sweeps depths 0..depth_cap, expanding at each depth the best leaf if
// it is no worse than every leaf expanded earlier in the sweep.
// depth_cap = 0 selects doop_hmax(budget, D).
SooResult run_soo(const Environment& env, std::size_t budget, std::size_t depth_cap = 0);

struct StoSooOptions {
  std::size_t m0 = 10;
  std::uint64_t seed = 0;
  std::size_t depth_cap = 0;   // 0: doop_hmax(budget, D)
  std::size_t evaluations = 0; // k; 0: ceil(budget / (m0 depth_cap))
  double delta = 0.0;          // 0: 1/sqrt(budget)
};

struct StoSooResult {
  RunResult run;
  std::size_t depth_cap = 0;
  std::size_t evaluations = 0;
  double delta = 0.0;
};

// StoSOO with lower confidence bounds (minimization). One evaluation is one
// deployment whose value is the mean loss over its m0 samples.
StoSooResult run_stosoo(const Environment& env, std::size_t budget,
                        const StoSooOptions& options);

// Dispatch by name: soo | stosoo | sequool | stroquool. SequOOL and
// StroquOOL are the DOOP and SOOP schedules with the center as the only
// candidate.
struct BlackboxOptions {
  std::size_t m0 = 10;
  std::uint64_t seed = 0;
  StoSooOptions stosoo;
};

RunResult run_blackbox(const std::string& name, const Environment& env,
                       std::size_t budget, const BlackboxOptions& options);

}  // namespace perfopt
