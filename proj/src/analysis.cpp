#include "perfopt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "perfopt/doop.hpp"
#include "perfopt/soop.hpp"

namespace perfopt {

double lambert_w(double x) {
  if (x < 0.0 || std::isnan(x)) throw std::domain_error("lambert_w: x must be >= 0");
  if (x == 0.0) return 0.0;
  double w = x < std::numbers::e ? std::log1p(x) * 0.75 : std::log(x) - std::log(std::log(x));
  for (int it = 0; it < 100; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double step = f / (ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0));
    w -= step;
    if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(w))) {
      break;
    }
  }
  return w;
}

std::string to_string(NoiseRegime regime) {
  return regime == NoiseRegime::kLow ? "low-noise" : "high-noise";
}

std::string to_string(BoundCase c) {
  switch (c) {
    case BoundCase::kFullZeroDim: return "full/d=0";
    case BoundCase::kFullPositiveDim: return "full/d>0";
    case BoundCase::kLowNoiseZeroDim: return "data/low-noise/d=0";
    case BoundCase::kLowNoisePositiveDim: return "data/low-noise/d>0";
    case BoundCase::kHighNoise: return "data/high-noise";
  }
  return "unknown";
}

namespace {

double nu_of(double alpha, std::size_t dim, double lz, double eps) {
  return std::pow(2.0 * std::sqrt(static_cast<double>(dim)), alpha) * lz * eps;
}

}  // namespace

RegimeParams regime_params(const TheoryInputs& in) {
  RegimeParams r;
  r.nu = nu_of(in.alpha, in.dim, in.lipschitz_z, in.epsilon);
  r.rho = std::pow(2.0, -in.alpha);
  const double log_term = std::log(static_cast<double>(in.budget) / in.delta);
  r.noise = 2.0 * std::numbers::sqrt2 * (in.complexity + std::sqrt(log_term)) /
            std::sqrt(static_cast<double>(in.m0));
  r.d = in.d;
  r.h_max = soop_budgets(in.budget, in.dim).h_max;
  const double hm = static_cast<double>(r.h_max);

  const double c = in.alpha * (in.d + 2.0) * std::numbers::ln2;
  r.h_tilde = lambert_w(hm * r.nu * r.nu * c / (r.noise * r.noise)) / c;

  if (in.d == 0.0) {
    r.h_bar = hm;
  } else {
    const double l = in.d * std::log(1.0 / r.rho);
    r.h_bar = lambert_w(hm * l) / l;
  }

  const double threshold =
      in.lipschitz_z * in.epsilon * std::pow(2.0, -in.alpha * r.h_tilde);
  r.regime = r.noise >= threshold ? NoiseRegime::kHigh : NoiseRegime::kLow;
  return r;
}

BoundReport bound_full(double d, double alpha, std::size_t dim, double lipschitz_z,
                       double epsilon, std::size_t budget) {
  BoundReport rep;
  rep.h_max = doop_hmax(budget, dim);
  const double hm = static_cast<double>(rep.h_max);
  const double scale = 2.0 * nu_of(alpha, dim, lipschitz_z, epsilon);
  if (d == 0.0) {
    rep.which = BoundCase::kFullZeroDim;
    rep.value = scale * std::pow(2.0, -alpha * hm);
    return rep;
  }
  rep.which = BoundCase::kFullPositiveDim;
  const double x = hm * alpha * d * std::numbers::ln2;
  rep.value = scale * std::exp(-lambert_w(x) / d);
  rep.closed_form_precondition = x >= std::numbers::e;
  if (rep.closed_form_precondition) {
    rep.closed_form = scale * std::pow(x / std::log(x), -1.0 / d);
  }
  return rep;
}

BoundReport bound_data(const TheoryInputs& in) {
  const RegimeParams r = regime_params(in);
  BoundReport rep;
  rep.h_max = r.h_max;
  const double hm = static_cast<double>(r.h_max);
  const double log_term = std::log(static_cast<double>(in.budget) / in.delta);
  const double tail = 4.0 * (in.complexity + std::sqrt(log_term)) /
                      std::sqrt(hm * static_cast<double>(in.m0));
  const double two_sqrt2 = 2.0 * std::numbers::sqrt2;
  const double c = in.alpha * (in.d + 2.0) * std::numbers::ln2;
  const double noise_floor =
      r.nu > 0.0 ? r.noise * r.noise * std::numbers::e / (r.nu * r.nu * c)
                 : std::numeric_limits<double>::infinity();

  if (r.regime == NoiseRegime::kHigh) {
    rep.which = BoundCase::kHighNoise;
    rep.value = 6.0 * r.nu * std::pow(2.0, -in.alpha * r.h_tilde) + tail;
    rep.closed_form_precondition = hm >= noise_floor;
    if (rep.closed_form_precondition) {
      const double y = hm * r.nu * r.nu * c / (r.noise * r.noise);
      rep.closed_form = 6.0 * r.nu * std::pow(y / std::log(y), -1.0 / (in.d + 2.0)) + tail;
    }
    return rep;
  }

  if (in.d == 0.0) {
    rep.which = BoundCase::kLowNoiseZeroDim;
    rep.value = (2.0 + two_sqrt2) * r.nu * std::pow(2.0, -in.alpha * hm) + tail;
    rep.closed_form_precondition = hm >= std::max(1.0, noise_floor);
    if (rep.closed_form_precondition) {
      rep.closed_form = (2.0 + 3.0 * std::numbers::sqrt2) * r.nu * std::pow(2.0, -in.alpha * hm);
    }
    return rep;
  }

  rep.which = BoundCase::kLowNoisePositiveDim;
  const double x = hm * in.alpha * in.d * std::numbers::ln2;
  rep.value = (2.0 + two_sqrt2) * r.nu * std::exp(-lambert_w(x) / in.d) + tail;
  rep.closed_form_precondition =
      hm >= std::max({1.0, std::numbers::e / (in.alpha * in.d * std::numbers::ln2), noise_floor});
  if (rep.closed_form_precondition) {
    rep.closed_form = (2.0 + 3.0 * std::numbers::sqrt2) * r.nu *
                      std::pow(x / std::log(x), -1.0 / in.d);
  }
  return rep;
}

NearOptimality near_opt_dim(const ScalarField& pr, const BoxDomain& domain, double nu,
                            double rho, std::size_t min_depth, std::size_t max_depth,
                            std::size_t resolution, std::optional<double> optimum_value) {
  if (!(nu > 0.0)) throw std::invalid_argument("near_opt_dim: nu must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("near_opt_dim: rho must be in (0,1)");
  if (min_depth > max_depth) throw std::invalid_argument("near_opt_dim: empty depth range");
  const std::size_t dim = domain.dim();
  if (dim * max_depth > 40) throw std::invalid_argument("near_opt_dim: depth range too deep");
  if (static_cast<double>(resolution) < 4.0 * std::ldexp(1.0, static_cast<int>(max_depth))) {
    throw std::invalid_argument(
        "near_opt_dim: grid too coarse, need >= 4 points per cell edge at max depth");
  }

  // Cell-centred grid, row-major with the last axis fastest.
  std::size_t total = 1;
  for (std::size_t k = 0; k < dim; ++k) total *= resolution;
  std::vector<double> values(total);
  std::vector<std::size_t> idx(dim, 0);
  double grid_min = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < total; ++c) {
    Point u(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      u[k] = (static_cast<double>(idx[k]) + 0.5) / static_cast<double>(resolution);
    }
    values[c] = pr(domain.from_unit(u));
    grid_min = std::min(grid_min, values[c]);
    for (std::size_t k = dim; k-- > 0;) {
      if (++idx[k] < resolution) break;
      idx[k] = 0;
    }
  }
  const double best = optimum_value.value_or(grid_min);

  NearOptimality out;
  for (std::size_t h = min_depth; h <= max_depth; ++h) {
    const std::size_t side = std::size_t{1} << h;
    std::size_t cells = 1;
    for (std::size_t k = 0; k < dim; ++k) cells *= side;
    std::vector<double> cell_min(cells, std::numeric_limits<double>::infinity());
    std::fill(idx.begin(), idx.end(), 0);
    for (std::size_t c = 0; c < total; ++c) {
      std::size_t cell = 0;
      for (std::size_t k = 0; k < dim; ++k) cell = cell * side + idx[k] * side / resolution;
      cell_min[cell] = std::min(cell_min[cell], values[c]);
      for (std::size_t k = dim; k-- > 0;) {
        if (++idx[k] < resolution) break;
        idx[k] = 0;
      }
    }
    const double threshold = best + 6.0 * nu * std::pow(rho, static_cast<double>(h));
    std::size_t count = 0;
    for (double v : cell_min) count += v <= threshold ? 1 : 0;
    out.depths.push_back(h);
    out.counts.push_back(count);
    // N_h <= rho^(-d h)  <=>  d >= log N_h / (h log(1/rho)); at h = 0 the
    // constraint is N_0 <= 1, which always holds.
    if (h > 0 && count > 1) {
      out.d = std::max(out.d, std::log(static_cast<double>(count)) /
                                  (static_cast<double>(h) * std::log(1.0 / rho)));
    }
  }
  return out;
}

}  // namespace perfopt
