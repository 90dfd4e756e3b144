#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perfopt/partition.hpp"

namespace perfopt {

// Counter-based uniform stream: the n-th draw is a pure function of
// (seed, n), so reruns with the same seed reproduce every sample.
class DrawStream {
 public:
  explicit DrawStream(std::uint64_t seed) : seed_(seed) {}

  // Uniform in [0, 1).
  double uniform();
  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

class Environment;

// Full performative feedback for one deployed decision: exact access to
// D(source), exposed through DPR(source, .).
class DistributionHandle {
 public:
  DistributionHandle(const Environment& env, Point source);

  const Point& source() const { return source_; }
  // DPR(source, theta) = E_{z ~ D(source)} f(theta, z)
  double dpr(std::span<const double> theta) const;

 private:
  const Environment* env_;
  Point source_;
};

// Pooled i.i.d. samples of D(source) gathered over repeated deployments.
// Batches are appended in draw order and never reordered.
class SampleSet {
 public:
  SampleSet(const Environment& env, Point source);

  const Point& source() const { return source_; }
  const std::vector<double>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  void append(std::span<const double> batch);

  double mean() const;
  // Unbiased sample standard deviation of z; 0 for fewer than two samples.
  double stddev() const;

  // Empirical DPR(source, theta): mean of f(theta, z_j) over the pool.
  // Throws std::invalid_argument when empty.
  double empirical_dpr(std::span<const double> theta) const;

 private:
  const Environment* env_;
  Point source_;
  std::vector<double> samples_;
  double sum_ = 0.0;
  double sum_sq_ = 0.0;
};

// What an optimizer may see: the loss, the domain and performative feedback.
// Ground truth lives behind GroundTruth and is never handed to optimizers.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual const BoxDomain& domain() const = 0;

  // Loss f(theta, z).
  virtual double loss(std::span<const double> theta, double z) const = 0;

  // Exact DPR(source, theta); used by full feedback.
  virtual double decoupled_risk(std::span<const double> source,
                                std::span<const double> theta) const = 0;

  // Appends `count` fresh draws from D(theta) to `out`.
  virtual void draw(std::span<const double> theta, std::size_t count,
                    DrawStream& stream, std::vector<double>& out) const = 0;

  // Mean of f(theta, z) over `samples`. Subclasses with structured losses
  // may override with an equivalent closed form.
  virtual double sample_risk(std::span<const double> theta,
                             const SampleSet& samples) const;

  DistributionHandle deploy_full(std::span<const double> theta) const;
  std::vector<double> deploy_sample(std::span<const double> theta,
                                    std::size_t m0, DrawStream& stream) const;

 protected:
  void check_domain(std::span<const double> theta) const;
};

struct Optimum {
  Point theta;
  double value = 0.0;
  bool exact = true;
  // Points per axis of the brute-force grid when exact == false.
  std::size_t grid_resolution = 0;
};

// Evaluation-only oracle.
class GroundTruth {
 public:
  virtual ~GroundTruth() = default;
  virtual double performative_risk(std::span<const double> theta) const = 0;
  virtual const Optimum& optimum() const = 0;
};

using ScalarField = std::function<double(std::span<const double>)>;

// f(theta, z) = g(theta) + z with z ~ Exponential(mean r(theta)).
// A zero mean is the point mass at 0.
class AdditiveExpEnv final : public Environment, public GroundTruth {
 public:
  // Without an analytic optimum the ground truth falls back to a brute-force
  // grid of `oracle_resolution` points per axis.
  AdditiveExpEnv(std::string name, BoxDomain domain, ScalarField base,
                 ScalarField rate, std::optional<Optimum> analytic_optimum = {},
                 std::size_t oracle_resolution = 1025);

  std::string name() const override { return name_; }
  const BoxDomain& domain() const override { return domain_; }

  double base(std::span<const double> theta) const { return base_(theta); }
  double rate(std::span<const double> theta) const;

  double loss(std::span<const double> theta, double z) const override;
  double decoupled_risk(std::span<const double> source,
                        std::span<const double> theta) const override;
  void draw(std::span<const double> theta, std::size_t count, DrawStream& stream,
            std::vector<double>& out) const override;
  double sample_risk(std::span<const double> theta,
                     const SampleSet& samples) const override;

  double performative_risk(std::span<const double> theta) const override;
  const Optimum& optimum() const override { return optimum_; }

 private:
  std::string name_;
  BoxDomain domain_;
  ScalarField base_;
  ScalarField rate_;
  Optimum optimum_;
};

double ackley(std::span<const double> x);
double rastrigin(std::span<const double> x);

// Shipped environments on [-5.12, 5.12]^2:
//   ackley_exp_rastrigin  f = Ackley + z,    z ~ Exp(mean Rastrigin)
//   rastrigin_exp_ackley  f = Rastrigin + z, z ~ Exp(mean Ackley)
std::unique_ptr<AdditiveExpEnv> make_environment(const std::string& name);
std::vector<std::string> environment_names();

// Regular grid with n points per axis including both box faces.
std::vector<Point> grid_points(const BoxDomain& domain, std::size_t n);

// sup |fn(a) - fn(b)| / |a - b| over all pairs of `points`.
double pairwise_lipschitz(const ScalarField& fn, std::span<const Point> points);

// Difference-quotient estimate over a dense 2-D or higher grid, comparing each
// point with its neighbours inside a (2r+1)^D stencil.
double stencil_lipschitz(const ScalarField& fn, const BoxDomain& domain,
                         std::size_t n, std::size_t radius = 2);

// Brute-force minimizer of fn over grid_points(domain, n).
Optimum grid_optimum(const ScalarField& fn, const BoxDomain& domain, std::size_t n);

// W1 distance between exponentials with means a and b, by quadrature of the
// quantile coupling. Used to justify epsilon = Lip(rate).
double exponential_w1(double mean_a, double mean_b, std::size_t nodes = 200000);

}  // namespace perfopt
