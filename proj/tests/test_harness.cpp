#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "perfopt/harness.hpp"

using namespace perfopt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("perfopt_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path write_config(const fs::path& dir, const ExperimentConfig& c) {
  const fs::path p = dir / "config_in.json";
  std::ofstream(p) << serialize_config(c);
  return p;
}

ExperimentConfig small_full(const fs::path& out) {
  ExperimentConfig c;
  c.name = "small";
  c.budget = 200;
  c.seeds = {0, 1, 2};
  c.algorithms = {AlgorithmSpec{"doop"}, AlgorithmSpec{"soo"}, AlgorithmSpec{"sequool"}};
  AlgorithmSpec z;
  z.name = "szooming";
  z.grid = 15;
  c.algorithms.push_back(z);
  c.output_dir = out.string();
  return c;
}

}  // namespace

TEST_CASE("config round trip") {
  ExperimentConfig c;
  c.name = "rt";
  c.environment = "rastrigin_exp_ackley";
  c.mode = FeedbackMode::kSampled;
  c.budget = 12345;
  c.m0 = 7;
  c.seeds = {3, 1, 4, 1000000000000ull};
  AlgorithmSpec z;
  z.name = "szooming";
  z.grid = 33;
  z.lipschitz_z = 1.5;
  z.epsilon = 0.1;
  z.alpha = 0.5;
  c.algorithms = {AlgorithmSpec{"soop", 5}, z, AlgorithmSpec{"stosoo"}};
  c.output_dir = "out/dir";
  CHECK(parse_config(serialize_config(c)) == c);

  ExperimentConfig d;
  d.algorithms = {AlgorithmSpec{"doop"}};
  CHECK(parse_config(serialize_config(d)) == d);
}

TEST_CASE("config defaults and validation") {
  const ExperimentConfig c = parse_config(R"({"algorithms": ["doop", "szooming"]})");
  CHECK(c.environment == "ackley_exp_rastrigin");
  CHECK(c.mode == FeedbackMode::kFull);
  CHECK(c.seeds.size() == 10);
  CHECK(c.seeds.front() == 0);
  CHECK(c.seeds.back() == 9);
  CHECK(c.m0 == 10);
  CHECK_FALSE(c.algorithms[1].epsilon.has_value());

  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"algorithms": ["doop"], "budgte": 3})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"algorithms": []})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"algorithms": ["nope"]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"algorithms": ["soop"]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"algorithms": ["doop"], "mode": "sampled"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"algorithms": ["doop", "doop"]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"algorithms": ["doop"], "environment": "x"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"algorithms": ["doop"], "budget": -4})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"algorithms": ["doop"], "seeds": []})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"algorithms": ["doop"], "seeds": [1, -2]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"algorithms": ["doop"], "m0": 2.5})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"algorithms": [{"name": "doop", "candidates": 0}]})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"algorithms": [{"name": "doop", "colour": 1}]})"),
                  ConfigError);
}

TEST_CASE("shipped configuration") {
  const ExperimentConfig c =
      load_config(fs::path(PERFOPT_SOURCE_DIR) / "configs" / "paper_fig2a.json");
  CHECK(c.environment == "ackley_exp_rastrigin");
  CHECK(c.mode == FeedbackMode::kFull);
  std::vector<std::string> names;
  for (const auto& a : c.algorithms) names.push_back(a.name);
  CHECK(names == std::vector<std::string>{"doop", "soo", "sequool", "szooming"});
  CHECK(c.algorithms[3].grid == 55);
  const ExperimentConfig s =
      load_config(fs::path(PERFOPT_SOURCE_DIR) / "configs" / "sampled_feedback.json");
  CHECK(s.mode == FeedbackMode::kSampled);
}

TEST_CASE("cli_run writes reproducible results") {
  const fs::path root = scratch("run");
  const ExperimentConfig cfg = small_full(root / "a");
  const fs::path cfg_path = write_config(root, cfg);
  std::ostringstream out, err;
  REQUIRE(cli_run(cfg_path, out, err) == 0);

  ExperimentConfig again = cfg;
  again.output_dir = (root / "b").string();
  const fs::path cfg_b = root / "config_b.json";
  std::ofstream(cfg_b) << serialize_config(again);
  REQUIRE(cli_run(cfg_b, out, err) == 0);

  for (const auto& a : cfg.algorithms) {
    for (auto seed : cfg.seeds) {
      const std::string stem = a.name + "_seed" + std::to_string(seed);
      CHECK(fs::exists(root / "a" / (stem + ".json")));
      CHECK(slurp(root / "a" / (stem + ".csv")) == slurp(root / "b" / (stem + ".csv")));
    }
  }
  for (const auto& e : fs::directory_iterator(root / "a")) {
    CHECK(e.path().extension() != ".tmp");
  }
  CHECK(parse_config(slurp(root / "a" / "config.json")) == cfg);

  using nlohmann::json;
  const json agg = json::parse(slurp(root / "a" / "aggregate.json"));
  CHECK(agg.at("equal_budget").get<bool>());
  CHECK(agg.at("x_axis") == "deployments");
  for (const auto& a : cfg.algorithms) {
    const json& alg = agg.at("algorithms").at(a.name);
    const auto& steps = alg.at("curve").at("step");
    const auto& mean = alg.at("curve").at("mean");
    REQUIRE(steps.size() > 0);
    // Mean over seeds of cum_regret[t], recomputed from the summaries and CSVs.
    for (std::size_t t : {std::size_t{0}, steps.size() / 2, steps.size() - 1}) {
      double sum = 0.0;
      for (auto seed : cfg.seeds) {
        std::istringstream csv(slurp(root / "a" / (a.name + "_seed" + std::to_string(seed) + ".csv")));
        std::string line;
        std::getline(csv, line);
        for (std::size_t i = 0; i <= t; ++i) std::getline(csv, line);
        std::vector<std::string> cols;
        std::stringstream ls(line);
        for (std::string col; std::getline(ls, col, ',');) cols.push_back(col);
        sum += std::stod(cols.at(5));
      }
      CHECK(mean[t].get<double>() == doctest::Approx(sum / cfg.seeds.size()).epsilon(1e-12));
    }
  }
  // Equal budgets: every algorithm deploys as often as DOOP on each seed.
  for (auto seed : cfg.seeds) {
    const auto doop = json::parse(slurp(root / "a" / ("doop_seed" + std::to_string(seed) + ".json")));
    for (const auto& a : cfg.algorithms) {
      const auto s = json::parse(
          slurp(root / "a" / (a.name + "_seed" + std::to_string(seed) + ".json")));
      CHECK(s.at("deployments") == doop.at("deployments"));
      CHECK(s.at("seed") == seed);
      CHECK(s.contains("seconds"));
      CHECK(s.at("optimum").at("exact").get<bool>());
    }
  }
  const auto zoom = json::parse(slurp(root / "a" / "szooming_seed0.json"));
  CHECK(zoom.at("epsilon").get<double>() > 0.0);

  SUBCASE("analyze") {
    std::ostringstream aout, aerr;
    REQUIRE(cli_analyze(root / "a", aout, aerr) == 0);
    const json rep = json::parse(aout.str());
    CHECK(rep.at("epsilon").get<double>() > 0.0);
    CHECK(fs::exists(root / "a" / "analysis.json"));
    bool saw_1000 = false;
    for (const auto& row : rep.at("bounds")) {
      if (row.at("budget") == 1000) {
        CHECK(row.at("doop_h_max") == 33);
        CHECK(row.at("soop_h_max") == 1);
        saw_1000 = true;
      }
    }
    CHECK(saw_1000);
    CHECK(rep.at("near_optimality").at("d").get<double>() >= 0.0);
    CHECK(rep.at("observed").contains("doop"));
  }
}

TEST_CASE("cli exit codes") {
  const fs::path root = scratch("codes");
  std::ostringstream out, err;
  std::ofstream(root / "bad.json") << "{\"algorithms\": [\"nope\"]}";
  CHECK(cli_run(root / "bad.json", out, err) == 2);
  CHECK(cli_run(root / "missing.json", out, err) == 2);

  ExperimentConfig c;
  c.mode = FeedbackMode::kSampled;
  c.budget = 500;
  c.seeds = {0};
  c.algorithms = {AlgorithmSpec{"soop"}};
  c.output_dir = (root / "out").string();
  CHECK(cli_run(write_config(root, c), out, err) == 3);

  fs::create_directories(root / "empty");
  CHECK(cli_analyze(root / "empty", out, err) == 2);
  CHECK(cli_analyze(root / "does_not_exist", out, err) == 2);
}

TEST_CASE("oracle dump") {
  std::ostringstream out, err;
  REQUIRE(cli_oracle("rastrigin_exp_ackley", 11, out, err) == 0);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "theta_0,theta_1,pr");
  std::size_t rows = 0;
  bool origin = false;
  while (std::getline(in, line)) {
    ++rows;
    origin |= line == "0,0,0";
  }
  CHECK(rows == 121);
  CHECK(origin);
  CHECK(cli_oracle("nope", 11, out, err) == 2);
}

TEST_CASE("atomic writes and workers") {
  const fs::path root = scratch("atomic");
  write_atomic(root / "x.txt", "hello");
  write_atomic(root / "x.txt", "world");
  CHECK(slurp(root / "x.txt") == "world");
  CHECK_FALSE(fs::exists(root / "x.txt.tmp"));

  setenv("PERFOPT_WORKERS", "3", 1);
  CHECK(worker_count() == 3);
  setenv("PERFOPT_WORKERS", "zero", 1);
  CHECK(worker_count() >= 1);
  unsetenv("PERFOPT_WORKERS");
}

TEST_CASE("sampled mode run") {
  const fs::path root = scratch("sampled");
  ExperimentConfig c;
  c.mode = FeedbackMode::kSampled;
  c.budget = 10000;
  c.seeds = {0, 1};
  AlgorithmSpec z;
  z.name = "szooming";
  z.grid = 11;
  c.algorithms = {AlgorithmSpec{"soop"}, AlgorithmSpec{"stroquool"}, AlgorithmSpec{"stosoo"}, z};
  c.output_dir = (root / "out").string();
  std::ostringstream out, err;
  REQUIRE(cli_run(write_config(root, c), out, err) == 0);
  const auto agg = nlohmann::json::parse(slurp(root / "out" / "aggregate.json"));
  CHECK(agg.at("equal_budget").get<bool>());
  CHECK(agg.at("reference") == "soop");
}
