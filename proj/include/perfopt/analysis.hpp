#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "perfopt/environment.hpp"

namespace perfopt {

// Principal branch of the Lambert W function on [0, inf), by Halley
// iteration. Throws std::domain_error for negative x.
double lambert_w(double x);

enum class NoiseRegime { kLow, kHigh };
std::string to_string(NoiseRegime regime);

// Problem constants entering the regret bounds. None of these are used by
// the optimizers themselves.
struct TheoryInputs {
  double d = 0.0;           // near-optimality dimension
  double alpha = 1.0;
  std::size_t dim = 2;
  double lipschitz_z = 1.0;
  double epsilon = 0.0;
  std::size_t budget = 1000;
  std::size_t m0 = 10;
  double complexity = 1.0;  // Rademacher constant C*(f)
  double delta = 0.05;
};

struct RegimeParams {
  double nu = 0.0;       // (2 sqrt(D))^alpha L_z eps
  double rho = 0.5;      // 2^-alpha
  double noise = 0.0;    // B = 2 sqrt(2) (C* + sqrt(log(T/delta))) / sqrt(m0)
  double d = 0.0;
  std::size_t h_max = 0; // data-driven schedule depth
  double h_tilde = 0.0;
  double h_bar = 0.0;
  NoiseRegime regime = NoiseRegime::kHigh;
};

// Uses soop_budgets(T, D) for h_max.
RegimeParams regime_params(const TheoryInputs& in);

enum class BoundCase {
  kFullZeroDim,
  kFullPositiveDim,
  kLowNoiseZeroDim,
  kLowNoisePositiveDim,
  kHighNoise,
};
std::string to_string(BoundCase c);

struct BoundReport {
  double value = 0.0;            // Lambert-W form of the matching case
  BoundCase which = BoundCase::kFullZeroDim;
  std::size_t h_max = 0;
  // Simplified log-ratio form; set only when its precondition holds.
  std::optional<double> closed_form;
  bool closed_form_precondition = false;
};

// Full-feedback simple-regret bound at h_max = doop_hmax(T, D).
BoundReport bound_full(double d, double alpha, std::size_t dim, double lipschitz_z,
                       double epsilon, std::size_t budget);

// Data-driven simple-regret bound at h_max from soop_budgets(T, D).
BoundReport bound_data(const TheoryInputs& in);

struct NearOptimality {
  std::vector<std::size_t> depths;
  std::vector<std::size_t> counts;  // N_h(6 nu rho^h) per depth
  double d = 0.0;
};

// Estimates d(nu, rho, 1) from a cell-centred grid of `resolution` points
// per axis: the infimum over a cell is the minimum over its grid points and
// PR(theta_PO) is `optimum_value` (grid minimum when absent). Requires at
// least 4 grid points per cell edge at the deepest depth.
NearOptimality near_opt_dim(const ScalarField& pr, const BoxDomain& domain, double nu,
                            double rho, std::size_t min_depth, std::size_t max_depth,
                            std::size_t resolution,
                            std::optional<double> optimum_value = std::nullopt);

}  // namespace perfopt
