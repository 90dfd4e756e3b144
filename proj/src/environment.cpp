#include "perfopt/environment.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace perfopt {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double DrawStream::uniform() {
  const std::uint64_t bits = splitmix64(seed_ ^ splitmix64(counter_++));
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------

DistributionHandle::DistributionHandle(const Environment& env, Point source)
    : env_(&env), source_(std::move(source)) {}

double DistributionHandle::dpr(std::span<const double> theta) const {
  return env_->decoupled_risk(source_, theta);
}

SampleSet::SampleSet(const Environment& env, Point source)
    : env_(&env), source_(std::move(source)) {}

void SampleSet::append(std::span<const double> batch) {
  for (double z : batch) {
    samples_.push_back(z);
    sum_ += z;
    sum_sq_ += z * z;
  }
}

double SampleSet::mean() const {
  if (samples_.empty()) throw std::invalid_argument("SampleSet::mean: empty sample set");
  return sum_ / static_cast<double>(samples_.size());
}

double SampleSet::stddev() const {
  const std::size_t n = samples_.size();
  if (n < 2) return 0.0;
  const double m = mean();
  double ss = 0.0;
  for (double z : samples_) ss += (z - m) * (z - m);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

double SampleSet::empirical_dpr(std::span<const double> theta) const {
  if (samples_.empty()) {
    throw std::invalid_argument("empirical_dpr: empty sample set");
  }
  return env_->sample_risk(theta, *this);
}

// ---------------------------------------------------------------------------

double Environment::sample_risk(std::span<const double> theta,
                                const SampleSet& samples) const {
  double acc = 0.0;
  for (double z : samples.samples()) acc += loss(theta, z);
  return acc / static_cast<double>(samples.size());
}

void Environment::check_domain(std::span<const double> theta) const {
  if (!domain().contains(theta)) {
    throw std::invalid_argument("decision outside the environment domain");
  }
}

DistributionHandle Environment::deploy_full(std::span<const double> theta) const {
  check_domain(theta);
  return DistributionHandle(*this, Point(theta.begin(), theta.end()));
}

std::vector<double> Environment::deploy_sample(std::span<const double> theta,
                                               std::size_t m0,
                                               DrawStream& stream) const {
  check_domain(theta);
  std::vector<double> batch;
  batch.reserve(m0);
  draw(theta, m0, stream, batch);
  return batch;
}

// ---------------------------------------------------------------------------

AdditiveExpEnv::AdditiveExpEnv(std::string name, BoxDomain domain, ScalarField base,
                               ScalarField rate, std::optional<Optimum> analytic_optimum,
                               std::size_t oracle_resolution)
    : name_(std::move(name)),
      domain_(std::move(domain)),
      base_(std::move(base)),
      rate_(std::move(rate)) {
  if (analytic_optimum) {
    optimum_ = *analytic_optimum;
  } else {
    optimum_ = grid_optimum(
        [this](std::span<const double> t) { return performative_risk(t); }, domain_,
        oracle_resolution);
  }
}

double AdditiveExpEnv::rate(std::span<const double> theta) const {
  const double r = rate_(theta);
  if (r < 0.0) throw std::domain_error("AdditiveExpEnv: negative exponential mean");
  return r;
}

double AdditiveExpEnv::loss(std::span<const double> theta, double z) const {
  return base_(theta) + z;
}

double AdditiveExpEnv::decoupled_risk(std::span<const double> source,
                                      std::span<const double> theta) const {
  check_domain(theta);
  return base_(theta) + rate(source);
}

void AdditiveExpEnv::draw(std::span<const double> theta, std::size_t count,
                          DrawStream& stream, std::vector<double>& out) const {
  const double mean = rate(theta);
  for (std::size_t j = 0; j < count; ++j) {
    const double u = stream.uniform();
    out.push_back(mean == 0.0 ? 0.0 : -mean * std::log1p(-u));
  }
}

double AdditiveExpEnv::sample_risk(std::span<const double> theta,
                                   const SampleSet& samples) const {
  return base_(theta) + samples.mean();
}

double AdditiveExpEnv::performative_risk(std::span<const double> theta) const {
  return base_(theta) + rate(theta);
}

// ---------------------------------------------------------------------------

double ackley(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double sq = 0.0;
  double cs = 0.0;
  for (double v : x) {
    sq += v * v;
    cs += std::cos(2.0 * std::numbers::pi * v);
  }
  const double a = std::exp(-0.2 * std::sqrt(sq / n));
  const double b = std::exp(cs / n);
  // Grouped so that the origin evaluates to exactly 0.
  return 20.0 * (1.0 - a) + (std::numbers::e - b);
}

double rastrigin(std::span<const double> x) {
  double acc = 10.0 * static_cast<double>(x.size());
  for (double v : x) acc += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v);
  return acc;
}

std::vector<std::string> environment_names() {
  return {"ackley_exp_rastrigin", "rastrigin_exp_ackley"};
}

std::unique_ptr<AdditiveExpEnv> make_environment(const std::string& name) {
  const BoxDomain box = BoxDomain::cube(2, -5.12, 5.12);
  const Optimum origin{Point{0.0, 0.0}, 0.0, true, 0};
  if (name == "ackley_exp_rastrigin") {
    return std::make_unique<AdditiveExpEnv>(name, box, ackley, rastrigin, origin);
  }
  if (name == "rastrigin_exp_ackley") {
    return std::make_unique<AdditiveExpEnv>(name, box, rastrigin, ackley, origin);
  }
  throw std::invalid_argument("unknown environment: " + name);
}

// ---------------------------------------------------------------------------

std::vector<Point> grid_points(const BoxDomain& domain, std::size_t n) {
  if (n < 2) throw std::invalid_argument("grid_points: need at least 2 points per axis");
  const std::size_t dim = domain.dim();
  std::size_t total = 1;
  for (std::size_t k = 0; k < dim; ++k) total *= n;
  std::vector<Point> pts;
  pts.reserve(total);
  std::vector<std::size_t> idx(dim, 0);
  for (std::size_t c = 0; c < total; ++c) {
    Point u(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      u[k] = static_cast<double>(idx[k]) / static_cast<double>(n - 1);
    }
    pts.push_back(domain.from_unit(u));
    // Row-major: last axis fastest.
    for (std::size_t k = dim; k-- > 0;) {
      if (++idx[k] < n) break;
      idx[k] = 0;
    }
  }
  return pts;
}

double pairwise_lipschitz(const ScalarField& fn, std::span<const Point> points) {
  std::vector<double> values(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) values[i] = fn(points[i]);
  double best = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < points[i].size(); ++k) {
        const double d = points[i][k] - points[j][k];
        d2 += d * d;
      }
      if (d2 == 0.0) continue;
      best = std::max(best, std::abs(values[i] - values[j]) / std::sqrt(d2));
    }
  }
  return best;
}

double stencil_lipschitz(const ScalarField& fn, const BoxDomain& domain,
                         std::size_t n, std::size_t radius) {
  const auto pts = grid_points(domain, n);
  const std::size_t dim = domain.dim();
  std::vector<double> values(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) values[i] = fn(pts[i]);

  // Offsets of the half stencil (lexicographically positive).
  std::vector<std::vector<long>> offsets;
  const long r = static_cast<long>(radius);
  std::vector<long> off(dim, -r);
  for (;;) {
    bool positive = false;
    for (long v : off) {
      if (v != 0) {
        positive = v > 0;
        break;
      }
    }
    if (positive) offsets.push_back(off);
    std::size_t k = dim;
    while (k-- > 0) {
      if (++off[k] <= r) break;
      off[k] = -r;
    }
    if (k == static_cast<std::size_t>(-1)) break;
  }

  std::vector<long> strides(dim, 1);
  for (std::size_t k = dim - 1; k-- > 0;) strides[k] = strides[k + 1] * static_cast<long>(n);

  double best = 0.0;
  std::vector<long> idx(dim, 0);
  for (std::size_t c = 0; c < pts.size(); ++c) {
    for (const auto& o : offsets) {
      long linear = static_cast<long>(c);
      bool inside = true;
      for (std::size_t k = 0; k < dim; ++k) {
        const long v = idx[k] + o[k];
        if (v < 0 || v >= static_cast<long>(n)) {
          inside = false;
          break;
        }
        linear += o[k] * strides[k];
      }
      if (!inside) continue;
      const auto& a = pts[c];
      const auto& b = pts[static_cast<std::size_t>(linear)];
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) d2 += (a[k] - b[k]) * (a[k] - b[k]);
      best = std::max(best, std::abs(values[c] - values[static_cast<std::size_t>(linear)]) /
                                std::sqrt(d2));
    }
    for (std::size_t k = dim; k-- > 0;) {
      if (++idx[k] < static_cast<long>(n)) break;
      idx[k] = 0;
    }
  }
  return best;
}

Optimum grid_optimum(const ScalarField& fn, const BoxDomain& domain, std::size_t n) {
  Optimum best;
  best.value = std::numeric_limits<double>::infinity();
  best.exact = false;
  best.grid_resolution = n;
  for (const auto& p : grid_points(domain, n)) {
    const double v = fn(p);
    if (v < best.value) {
      best.value = v;
      best.theta = p;
    }
  }
  return best;
}

double exponential_w1(double mean_a, double mean_b, std::size_t nodes) {
  // Quantile coupling: W1 = int_0^1 |Q_a(u) - Q_b(u)| du with
  // Q(u) = -mean ln(1-u). Substituting v = -ln(1-u) removes the endpoint
  // singularity; Simpson's rule on [0, 60] (tail mass < 1e-24).
  if (nodes % 2 == 1) ++nodes;
  const double upper = 60.0;
  const double step = upper / static_cast<double>(nodes);
  auto integrand = [&](double v) {
    return std::abs(mean_a * v - mean_b * v) * std::exp(-v);
  };
  double acc = integrand(0.0) + integrand(upper);
  for (std::size_t i = 1; i < nodes; ++i) {
    acc += (i % 2 == 1 ? 4.0 : 2.0) * integrand(step * static_cast<double>(i));
  }
  return acc * step / 3.0;
}

}  // namespace perfopt
