#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <type_traits>

#include "oracles.hpp"
#include "perfopt/environment.hpp"

using namespace perfopt;

namespace {

Point random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-5.12, 5.12);
  return {unif(rng), unif(rng)};
}

double dist(const Point& a, const Point& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

}  // namespace

TEST_CASE("ackley") {
  CHECK(ackley(Point{0.0, 0.0}) == 0.0);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100000; ++i) {
    const Point x = random_point(rng);
    const double a = ackley(x);
    CHECK(a >= 0.0);
    if (i < 100) {
      CHECK(a == doctest::Approx(oracle::ackley2(x[0], x[1])).epsilon(1e-12));
      CHECK(a == doctest::Approx(ackley(Point{x[1], x[0]})).epsilon(1e-14));
      CHECK(a == doctest::Approx(ackley(Point{-x[0], -x[1]})).epsilon(1e-14));
    }
  }
}

TEST_CASE("rastrigin") {
  CHECK(rastrigin(Point{0.0, 0.0}) == 0.0);
  CHECK(rastrigin(Point{1.0, 1.0}) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(rastrigin(Point{0.5, 0.0}) == doctest::Approx(20.25).epsilon(1e-14));
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const Point x = random_point(rng);
    CHECK(rastrigin(x) == doctest::Approx(oracle::rastrigin2(x[0], x[1])).epsilon(1e-12));
  }
}

TEST_CASE("shipped environments") {
  CHECK(environment_names().size() == 2);
  for (const auto& name : environment_names()) {
    auto env = make_environment(name);
    CHECK(env->name() == name);
    CHECK(env->domain().lower() == Point{-5.12, -5.12});
    CHECK(env->domain().upper() == Point{5.12, 5.12});
    CHECK(env->optimum().exact);
    CHECK(env->optimum().value == 0.0);
    CHECK(env->performative_risk(env->optimum().theta) == 0.0);
  }
  CHECK_THROWS_AS(make_environment("nope"), std::invalid_argument);
}

TEST_CASE("decoupled risk with full feedback") {
  auto env = make_environment("ackley_exp_rastrigin");
  const DistributionHandle h = env->deploy_full(Point{1.0, 1.0});
  CHECK(h.dpr(Point{0.0, 0.0}) == doctest::Approx(2.0).epsilon(1e-14));

  // Monte-Carlo cross-check of the closed form.
  DrawStream stream(42);
  std::vector<double> z;
  env->draw(Point{1.0, 1.0}, 1000000, stream, z);
  double sum = 0.0, sq = 0.0;
  for (double v : z) {
    const double f = env->loss(Point{0.0, 0.0}, v);
    sum += f;
    sq += f * f;
  }
  const double n = static_cast<double>(z.size());
  const double mean = sum / n;
  const double sd = std::sqrt((sq - n * mean * mean) / (n - 1));
  CHECK(std::abs(mean - 2.0) <= 3.0 * sd / std::sqrt(n));

  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Point t = random_point(rng);
    CHECK(env->deploy_full(t).dpr(t) == doctest::Approx(env->performative_risk(t)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(h.dpr(Point{6.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(env->deploy_full(Point{0.0, -5.2}), std::invalid_argument);
}

TEST_CASE("decoupled risk error is bounded by the map sensitivity") {
  for (const auto& name : environment_names()) {
    auto env = make_environment(name);
    const ScalarField rate = [&](std::span<const double> t) { return env->rate(t); };
    const double eps = stencil_lipschitz(rate, env->domain(), 1025);
    CHECK(eps > 0.0);
    std::mt19937_64 rng(4);
    int violations = 0;
    for (int i = 0; i < 1000; ++i) {
      const Point a = random_point(rng), b = random_point(rng);
      const double gap = std::abs(env->performative_risk(b) - env->deploy_full(a).dpr(b));
      violations += gap > eps * dist(a, b) + 1e-12;
    }
    CHECK(violations == 0);
  }
}

TEST_CASE("sample sets") {
  auto env = make_environment("ackley_exp_rastrigin");
  SampleSet s(*env, Point{1.0, 1.0});
  CHECK_THROWS_AS(s.empirical_dpr(Point{0.0, 0.0}), std::invalid_argument);
  const std::vector<double> batch{1.0, 3.0};
  s.append(batch);
  CHECK(s.empirical_dpr(Point{0.0, 0.0}) == 2.0);
  CHECK(s.mean() == 2.0);
  CHECK(s.stddev() == doctest::Approx(std::sqrt(2.0)));
  const std::vector<double> more{5.0};
  s.append(more);
  CHECK(s.samples() == std::vector<double>{1.0, 3.0, 5.0});

  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const Point a = random_point(rng), b = random_point(rng);
    const double diff = s.empirical_dpr(a) - s.empirical_dpr(b);
    CHECK(diff == doctest::Approx(env->base(a) - env->base(b)).epsilon(1e-12).scale(1.0));
  }

  // Generic loop and closed form agree.
  SampleSet big(*env, Point{2.0, -1.0});
  DrawStream stream(6);
  big.append(env->deploy_sample(Point{2.0, -1.0}, 1000, stream));
  const Point probe{0.3, 0.7};
  double direct = 0.0;
  for (double z : big.samples()) direct += env->loss(probe, z);
  direct /= static_cast<double>(big.size());
  CHECK(big.empirical_dpr(probe) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("empirical DPR converges to the exact DPR") {
  auto env = make_environment("rastrigin_exp_ackley");
  const Point src{0.7, -2.2};
  const Point probe{1.5, 0.25};
  DrawStream stream(7);
  SampleSet s(*env, src);
  s.append(env->deploy_sample(src, 1000000, stream));
  const double exact = env->deploy_full(src).dpr(probe);
  CHECK(std::abs(s.empirical_dpr(probe) - exact) <= 3.0 * s.stddev() / std::sqrt(double(s.size())));
}

TEST_CASE("sampled feedback") {
  auto env = make_environment("ackley_exp_rastrigin");
  DrawStream a(99), b(99), c(100);
  const auto xa = env->deploy_sample(Point{1.0, 1.0}, 50, a);
  const auto xb = env->deploy_sample(Point{1.0, 1.0}, 50, b);
  const auto xc = env->deploy_sample(Point{1.0, 1.0}, 50, c);
  CHECK(xa == xb);
  CHECK(xa != xc);
  CHECK(a.draws() == 50);
  CHECK(env->deploy_sample(Point{1.0, 1.0}, 10, a).size() == 10);

  DrawStream big(8);
  const auto z = env->deploy_sample(Point{1.0, 1.0}, 100000, big);
  double sum = 0.0;
  for (double v : z) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(sum / 1e5 == doctest::Approx(2.0).epsilon(0.025));

  // Mean 0 is the point mass at 0.
  const auto at_origin = env->deploy_sample(Point{0.0, 0.0}, 20, big);
  for (double v : at_origin) CHECK(v == 0.0);
}

TEST_CASE("W1 between exponentials is the mean gap") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unif(0.0, 50.0);
  for (int i = 0; i < 20; ++i) {
    const double a = unif(rng), b = unif(rng);
    CHECK(std::abs(exponential_w1(a, b) - std::abs(a - b)) <= 1e-6);
  }
}

TEST_CASE("lipschitz helpers") {
  const BoxDomain box = BoxDomain::cube(2, -1.0, 1.0);
  const ScalarField linear = [](std::span<const double> t) { return 3.0 * t[0] - 4.0 * t[1]; };
  const auto grid = grid_points(box, 11);
  CHECK(grid.size() == 121);
  CHECK(grid.front() == Point{-1.0, -1.0});
  CHECK(grid.back() == Point{1.0, 1.0});
  CHECK(grid[1][0] == -1.0);  // last axis fastest
  CHECK(pairwise_lipschitz(linear, grid) == doctest::Approx(5.0));
  CHECK(stencil_lipschitz(linear, box, 101) == doctest::Approx(5.0).epsilon(0.03));
  CHECK(stencil_lipschitz(linear, box, 101) <= 5.0 + 1e-12);
}

TEST_CASE("grid oracle for environments without an analytic optimum") {
  const BoxDomain box = BoxDomain::cube(2, 0.0, 1.0);
  const ScalarField bowl = [](std::span<const double> t) {
    return (t[0] - 0.3) * (t[0] - 0.3) + (t[1] - 0.6) * (t[1] - 0.6);
  };
  const ScalarField flat = [](std::span<const double>) { return 1.0; };
  AdditiveExpEnv env("bowl", box, bowl, flat, std::nullopt, 101);
  CHECK_FALSE(env.optimum().exact);
  CHECK(env.optimum().grid_resolution == 101);
  CHECK(env.optimum().theta[0] == doctest::Approx(0.3));
  CHECK(env.optimum().theta[1] == doctest::Approx(0.6));
  CHECK(env.optimum().value == doctest::Approx(1.0));
}

TEST_CASE("optimizers cannot reach the ground truth") {
  static_assert(!std::is_base_of_v<GroundTruth, Environment>);
  static_assert(!std::is_convertible_v<Environment*, GroundTruth*>);
  CHECK(true);
}
