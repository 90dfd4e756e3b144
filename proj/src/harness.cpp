#include "perfopt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>
#include <type_traits>

#include <json.hpp>

#include "perfopt/analysis.hpp"
#include "perfopt/doop.hpp"
#include "perfopt/soop.hpp"

namespace perfopt {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

const std::set<std::string> kFullAlgorithms = {"doop", "soo", "sequool", "szooming"};
const std::set<std::string> kSampledAlgorithms = {"soop", "stosoo", "stroquool", "szooming"};

template <typename T>
T get_field(const json& obj, const std::string& key, const std::string& where) {
  if constexpr (std::is_unsigned_v<T>) {
    if (!obj.at(key).is_number_unsigned()) {
      throw ConfigError(where + "." + key + ": expected a nonnegative integer");
    }
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

AlgorithmSpec parse_algorithm(const json& obj, std::size_t position) {
  const std::string where = "algorithms[" + std::to_string(position) + "]";
  if (obj.is_string()) {
    AlgorithmSpec spec;
    spec.name = obj.get<std::string>();
    return spec;
  }
  check_keys(obj, {"name", "candidates", "grid", "lipschitz_z", "epsilon", "alpha"}, where);
  AlgorithmSpec spec;
  spec.name = get_field<std::string>(obj, "name", where);
  if (obj.contains("candidates")) spec.candidates = get_field<std::size_t>(obj, "candidates", where);
  if (obj.contains("grid")) spec.grid = get_field<std::size_t>(obj, "grid", where);
  if (obj.contains("lipschitz_z")) spec.lipschitz_z = get_field<double>(obj, "lipschitz_z", where);
  if (obj.contains("epsilon") && !obj.at("epsilon").is_null()) {
    spec.epsilon = get_field<double>(obj, "epsilon", where);
  }
  if (obj.contains("alpha")) spec.alpha = get_field<double>(obj, "alpha", where);
  if (spec.candidates == 0) throw ConfigError(where + ": candidates must be >= 1");
  if (spec.grid < 2) throw ConfigError(where + ": grid must be >= 2");
  if (spec.epsilon && *spec.epsilon < 0.0) throw ConfigError(where + ": epsilon must be >= 0");
  if (!(spec.alpha > 0.0 && spec.alpha <= 1.0)) throw ConfigError(where + ": alpha must be in (0,1]");
  return spec;
}

ordered_json algorithm_json(const AlgorithmSpec& spec) {
  ordered_json j;
  j["name"] = spec.name;
  j["candidates"] = spec.candidates;
  j["grid"] = spec.grid;
  j["lipschitz_z"] = spec.lipschitz_z;
  j["epsilon"] = spec.epsilon ? ordered_json(*spec.epsilon) : ordered_json(nullptr);
  j["alpha"] = spec.alpha;
  return j;
}

ordered_json config_json(const ExperimentConfig& c) {
  ordered_json j;
  j["name"] = c.name;
  j["environment"] = c.environment;
  j["mode"] = to_string(c.mode);
  j["budget"] = c.budget;
  j["m0"] = c.m0;
  j["seeds"] = c.seeds;
  j["algorithms"] = ordered_json::array();
  for (const auto& a : c.algorithms) j["algorithms"].push_back(algorithm_json(a));
  j["output_dir"] = c.output_dir;
  return j;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Stats {
  double mean = 0.0;
  double std = 0.0;
};

Stats stats_of(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

ordered_json stats_json(const std::vector<double>& v) {
  const Stats s = stats_of(v);
  return ordered_json{{"mean", s.mean}, {"std", s.std}};
}

std::string run_stem(const std::string& algorithm, std::uint64_t seed) {
  return algorithm + "_seed" + std::to_string(seed);
}

ordered_json summary_json(const ExperimentConfig& config, const RunOutcome& o) {
  const RunTrace& t = o.trace;
  ordered_json j;
  j["config"] = config_json(config);
  j["algorithm"] = o.algorithm;
  j["seed"] = o.seed;
  j["environment"] = config.environment;
  j["mode"] = to_string(config.mode);
  j["budget"] = o.budget;
  j["deployments"] = t.deployments();
  j["simple_regret"] = t.simple_regret;
  j["cumulative_regret"] = t.cumulative_regret;
  j["final_pr"] = t.final_pr;
  j["theta"] = t.theta;
  j["seconds"] = t.seconds;
  j["optimum"] = {{"value", t.optimum_value},
                  {"exact", t.optimum_exact},
                  {"grid_resolution", t.oracle_resolution}};
  j["x_axis"] = "deployments";
  if (o.epsilon) j["epsilon"] = *o.epsilon;
  return j;
}

// Runs tasks on up to `workers` threads; rethrows the first failure.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& task) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (failure) return;
      }
      try {
        task(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(workers, count));
  if (n == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n; ++k) pool.emplace_back(body);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, {"name", "environment", "mode", "budget", "m0", "seeds", "algorithms",
                 "output_dir"},
             "config");
  ExperimentConfig c;
  if (j.contains("name")) c.name = get_field<std::string>(j, "name", "config");
  if (j.contains("environment")) {
    c.environment = get_field<std::string>(j, "environment", "config");
  }
  if (j.contains("mode")) {
    try {
      c.mode = feedback_mode_from_string(get_field<std::string>(j, "mode", "config"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("budget")) c.budget = get_field<std::size_t>(j, "budget", "config");
  if (j.contains("m0")) c.m0 = get_field<std::size_t>(j, "m0", "config");
  if (j.contains("seeds")) {
    const json& seeds = j.at("seeds");
    if (!seeds.is_array()) throw ConfigError("config.seeds must be an array");
    c.seeds.clear();
    for (const auto& s : seeds) {
      if (!s.is_number_unsigned()) throw ConfigError("config.seeds: expected nonnegative integers");
      c.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  if (j.contains("output_dir")) c.output_dir = get_field<std::string>(j, "output_dir", "config");
  if (!j.contains("algorithms") || !j.at("algorithms").is_array()) {
    throw ConfigError("config.algorithms must be a non-empty array");
  }
  std::size_t pos = 0;
  for (const auto& a : j.at("algorithms")) c.algorithms.push_back(parse_algorithm(a, pos++));

  const auto names = environment_names();
  if (std::find(names.begin(), names.end(), c.environment) == names.end()) {
    throw ConfigError("unknown environment: " + c.environment);
  }
  if (c.budget == 0) throw ConfigError("budget must be positive");
  if (c.m0 == 0) throw ConfigError("m0 must be positive");
  if (c.seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (c.algorithms.empty()) throw ConfigError("algorithms must be non-empty");
  std::set<std::string> seen;
  for (const auto& a : c.algorithms) {
    if (!kFullAlgorithms.count(a.name) && !kSampledAlgorithms.count(a.name)) {
      throw ConfigError("unknown algorithm: " + a.name);
    }
    if (!supports_mode(a.name, c.mode)) {
      throw ConfigError("algorithm " + a.name + " does not run in " + to_string(c.mode) +
                        " mode");
    }
    if (!seen.insert(a.name).second) throw ConfigError("duplicate algorithm: " + a.name);
  }
  if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size()) {
    throw ConfigError("duplicate seeds");
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) { return parse_config(read_file(path)); }

std::string serialize_config(const ExperimentConfig& config) {
  return config_json(config).dump(2) + "\n";
}

std::string reference_algorithm(FeedbackMode mode) {
  return mode == FeedbackMode::kFull ? "doop" : "soop";
}

bool supports_mode(const std::string& algorithm, FeedbackMode mode) {
  return mode == FeedbackMode::kFull ? kFullAlgorithms.count(algorithm) > 0
                                     : kSampledAlgorithms.count(algorithm) > 0;
}

double map_epsilon(const AdditiveExpEnv& env, std::size_t grid) {
  const auto points = grid_points(env.domain(), grid);
  return pairwise_lipschitz([&env](std::span<const double> t) { return env.rate(t); }, points);
}

RunOutcome run_single(const ExperimentConfig& config, const AlgorithmSpec& spec,
                      std::uint64_t seed, std::size_t budget) {
  const auto env = make_environment(config.environment);
  RunOutcome out;
  out.algorithm = spec.name;
  out.seed = seed;
  out.budget = budget;

  RunResult run;
  if (spec.name == "doop") {
    // Full feedback is deterministic; the seed varies the candidate rotation.
    run = run_doop(*env, budget, TreeOptions{spec.candidates, seed}).run;
  } else if (spec.name == "soop") {
    run = run_soop(*env, budget, config.m0, seed, TreeOptions{spec.candidates, 0}).run;
  } else if (spec.name == "szooming") {
    ZoomingOptions opts;
    opts.lipschitz_z = spec.lipschitz_z;
    opts.epsilon = spec.epsilon ? *spec.epsilon : map_epsilon(*env, spec.grid);
    opts.alpha = spec.alpha;
    opts.mode = config.mode;
    opts.m0 = config.m0;
    opts.seed = seed;
    out.epsilon = opts.epsilon;
    run = run_szooming(*env, budget, grid_points(env->domain(), spec.grid), opts).run;
  } else {
    BlackboxOptions opts;
    opts.m0 = config.m0;
    opts.seed = seed;
    run = run_blackbox(spec.name, *env, budget, opts);
  }
  out.trace = build_trace(run, *env);
  out.trace.algorithm = spec.name;
  return out;
}

void write_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << contents;
    f.flush();
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::size_t worker_count() {
  if (const char* v = std::getenv("PERFOPT_WORKERS")) {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end != v && *end == '\0' && n > 0) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int cli_run(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  ExperimentConfig config;
  try {
    config = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "invalid config: " << e.what() << "\n";
    return 2;
  }

  const std::string ref = reference_algorithm(config.mode);
  std::vector<const AlgorithmSpec*> first, rest;
  for (const auto& a : config.algorithms) (a.name == ref ? first : rest).push_back(&a);

  // The reference run of each seed fixes the budget of the other algorithms
  // on that seed. SequOOL and StroquOOL share the reference schedule and keep
  // the nominal budget.
  std::map<std::pair<std::string, std::uint64_t>, RunOutcome> results;
  std::mutex mu;
  auto run_phase = [&](const std::vector<const AlgorithmSpec*>& specs) {
    std::vector<std::pair<const AlgorithmSpec*, std::uint64_t>> tasks;
    for (const auto* s : specs) {
      for (auto seed : config.seeds) tasks.emplace_back(s, seed);
    }
    parallel_for(tasks.size(), worker_count(), [&](std::size_t i) {
      const auto& [spec, seed] = tasks[i];
      std::size_t budget = config.budget;
      const bool shares_schedule = spec->name == "sequool" || spec->name == "stroquool";
      if (!shares_schedule && spec->name != ref) {
        std::lock_guard<std::mutex> lock(mu);
        auto it = results.find({ref, seed});
        if (it != results.end()) budget = it->second.trace.deployments();
      }
      RunOutcome o = run_single(config, *spec, seed, budget);
      std::lock_guard<std::mutex> lock(mu);
      results[{spec->name, seed}] = std::move(o);
    });
  };

  try {
    run_phase(first);
    run_phase(rest);
  } catch (const BudgetTooSmall& e) {
    err << "budget too small: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "invalid config: " << e.what() << "\n";
    return 2;
  }

  const fs::path dir = config.output_dir;
  try {
    fs::create_directories(dir);
    write_atomic(dir / "config.json", serialize_config(config));

    ordered_json agg;
    agg["name"] = config.name;
    agg["environment"] = config.environment;
    agg["mode"] = to_string(config.mode);
    agg["budget"] = config.budget;
    agg["seeds"] = config.seeds;
    agg["x_axis"] = "deployments";
    agg["reference"] = ref;
    bool equal_budget = true;
    agg["algorithms"] = ordered_json::object();

    for (const auto& spec : config.algorithms) {
      std::vector<double> simple, cumulative, seconds;
      std::vector<std::size_t> budgets, deployments;
      std::size_t shared = std::numeric_limits<std::size_t>::max();
      for (auto seed : config.seeds) {
        const RunOutcome& o = results.at({spec.name, seed});
        write_atomic(dir / (run_stem(spec.name, seed) + ".csv"), trace_csv(o.trace));
        write_atomic(dir / (run_stem(spec.name, seed) + ".json"),
                     summary_json(config, o).dump(2) + "\n");
        simple.push_back(o.trace.simple_regret);
        cumulative.push_back(o.trace.cumulative_regret);
        seconds.push_back(o.trace.seconds);
        budgets.push_back(o.budget);
        deployments.push_back(o.trace.deployments());
        shared = std::min(shared, o.trace.deployments());
        auto it = results.find({ref, seed});
        if (it != results.end() && o.trace.deployments() > it->second.trace.deployments()) {
          equal_budget = false;
        }
      }
      ordered_json curve;
      curve["step"] = ordered_json::array();
      curve["mean"] = ordered_json::array();
      curve["std"] = ordered_json::array();
      for (std::size_t t = 0; t < shared; ++t) {
        std::vector<double> at;
        for (auto seed : config.seeds) {
          at.push_back(results.at({spec.name, seed}).trace.records[t].cum_regret);
        }
        const Stats s = stats_of(at);
        curve["step"].push_back(t + 1);
        curve["mean"].push_back(s.mean);
        curve["std"].push_back(s.std);
      }
      ordered_json a;
      a["runs"] = config.seeds.size();
      a["budget"] = budgets;
      a["deployments"] = deployments;
      a["simple_regret"] = stats_json(simple);
      a["cumulative_regret"] = stats_json(cumulative);
      a["seconds"] = stats_json(seconds);
      a["curve"] = std::move(curve);
      agg["algorithms"][spec.name] = std::move(a);

      const Stats cs = stats_of(cumulative);
      const Stats ss = stats_of(simple);
      out << spec.name << ": cumulative regret " << cs.mean << " +- " << cs.std
          << ", simple regret " << ss.mean << " +- " << ss.std << "\n";
    }
    agg["equal_budget"] = equal_budget;
    write_atomic(dir / "aggregate.json", agg.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "failed to write results: " << e.what() << "\n";
    return 1;
  }
  out << "results written to " << dir.string() << "\n";
  return 0;
}

int cli_analyze(const fs::path& run_dir, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(run_dir)) {
    err << "not a directory: " << run_dir.string() << "\n";
    return 2;
  }
  const fs::path config_path = run_dir / "config.json";
  if (!fs::exists(config_path)) {
    err << "missing config.json in " << run_dir.string() << "\n";
    return 2;
  }
  ExperimentConfig config;
  try {
    config = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "invalid config.json: " << e.what() << "\n";
    return 2;
  }

  std::map<std::string, std::vector<json>> summaries;
  for (const auto& spec : config.algorithms) {
    for (auto seed : config.seeds) {
      const fs::path p = run_dir / (run_stem(spec.name, seed) + ".json");
      if (!fs::exists(p)) {
        err << "missing summary " << p.string() << "\n";
        return 2;
      }
      try {
        summaries[spec.name].push_back(json::parse(read_file(p)));
      } catch (const std::exception& e) {
        err << "unreadable summary " << p.string() << ": " << e.what() << "\n";
        return 2;
      }
    }
  }

  const auto env = make_environment(config.environment);
  const BoxDomain& domain = env->domain();
  const std::size_t dim = domain.dim();
  ScalarField rate = [&env](std::span<const double> t) { return env->rate(t); };
  ScalarField pr = [&env](std::span<const double> t) { return env->performative_risk(t); };

  constexpr std::size_t kDenseGrid = 513;
  constexpr double kAlpha = 1.0;
  constexpr double kLipschitzZ = 1.0;  // f(theta, z) = g(theta) + z
  const double epsilon = stencil_lipschitz(rate, domain, kDenseGrid);
  double width = 0.0;
  for (std::size_t k = 0; k < dim; ++k) width = std::max(width, domain.width(k));
  // The partition lives on the unit cube; sensitivity is rescaled to it.
  const double epsilon_unit = epsilon * width;

  const double nu = std::pow(2.0 * std::sqrt(static_cast<double>(dim)), kAlpha) *
                    kLipschitzZ * epsilon_unit;
  const double rho = std::pow(2.0, -kAlpha);
  constexpr std::size_t kMaxDepth = 6;
  const NearOptimality near = near_opt_dim(pr, domain, nu, rho, 1, kMaxDepth, 256,
                                           env->optimum().value);

  ordered_json report;
  report["environment"] = config.environment;
  report["mode"] = to_string(config.mode);
  report["alpha"] = kAlpha;
  report["lipschitz_z"] = kLipschitzZ;
  report["epsilon"] = epsilon;
  report["epsilon_method"] = "grid Lipschitz constant of the distribution-map mean, " +
                             std::to_string(kDenseGrid) + " points per axis";
  report["epsilon_unit_cube"] = epsilon_unit;
  report["nu"] = nu;
  report["rho"] = rho;
  report["near_optimality"] = {{"d", near.d},
                               {"depths", near.depths},
                               {"counts", near.counts},
                               {"grid", 256}};

  TheoryInputs base;
  base.d = near.d;
  base.alpha = kAlpha;
  base.dim = dim;
  base.lipschitz_z = kLipschitzZ;
  base.epsilon = epsilon_unit;
  base.m0 = config.m0;

  std::set<std::size_t> budgets = {config.budget, 1000, 10000, 100000};
  ordered_json overlays = ordered_json::array();
  for (std::size_t t : budgets) {
    ordered_json row;
    row["budget"] = t;
    try {
      const BoundReport full = bound_full(near.d, kAlpha, dim, kLipschitzZ, epsilon_unit, t);
      row["doop_h_max"] = full.h_max;
      row["bound_full"] = {{"value", full.value},
                           {"case", to_string(full.which)},
                           {"closed_form", full.closed_form ? json(*full.closed_form) : json()},
                           {"closed_form_precondition", full.closed_form_precondition}};
    } catch (const BudgetTooSmall&) {
      row["doop_h_max"] = nullptr;
      row["bound_full"] = nullptr;
    }
    try {
      TheoryInputs in = base;
      in.budget = t;
      const RegimeParams reg = regime_params(in);
      const BoundReport data = bound_data(in);
      row["soop_h_max"] = reg.h_max;
      row["regime"] = to_string(reg.regime);
      row["noise_scale"] = reg.noise;
      row["h_tilde"] = reg.h_tilde;
      row["h_bar"] = reg.h_bar;
      row["bound_data"] = {{"value", data.value},
                           {"case", to_string(data.which)},
                           {"closed_form", data.closed_form ? json(*data.closed_form) : json()},
                           {"closed_form_precondition", data.closed_form_precondition}};
    } catch (const BudgetTooSmall&) {
      row["soop_h_max"] = nullptr;
      row["regime"] = nullptr;
      row["bound_data"] = nullptr;
    }
    overlays.push_back(std::move(row));
  }
  report["bounds"] = std::move(overlays);

  ordered_json observed = ordered_json::object();
  for (const auto& spec : config.algorithms) {
    std::vector<double> simple, cumulative;
    for (const auto& s : summaries[spec.name]) {
      simple.push_back(s.at("simple_regret").get<double>());
      cumulative.push_back(s.at("cumulative_regret").get<double>());
    }
    observed[spec.name] = {{"simple_regret", stats_json(simple)},
                           {"cumulative_regret", stats_json(cumulative)}};
  }
  report["observed"] = std::move(observed);

  const std::string text = report.dump(2) + "\n";
  try {
    write_atomic(run_dir / "analysis.json", text);
  } catch (const std::exception& e) {
    err << "failed to write analysis.json: " << e.what() << "\n";
    return 1;
  }
  out << text;
  return 0;
}

int cli_oracle(const std::string& env_name, std::size_t resolution, std::ostream& out,
               std::ostream& err) {
  std::unique_ptr<AdditiveExpEnv> env;
  try {
    env = make_environment(env_name);
  } catch (const std::invalid_argument& e) {
    err << e.what() << "\n";
    return 2;
  }
  if (resolution < 2) {
    err << "resolution must be at least 2\n";
    return 2;
  }
  const std::size_t dim = env->domain().dim();
  for (std::size_t k = 0; k < dim; ++k) out << "theta_" << k << ',';
  out << "pr\n";
  for (const auto& p : grid_points(env->domain(), resolution)) {
    for (double v : p) out << format_double(v) << ',';
    out << format_double(env->performative_risk(p)) << '\n';
  }
  return 0;
}

}  // namespace perfopt
