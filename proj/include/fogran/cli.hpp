#pragma once

// Run configuration and the train / evaluate / sweep / oracle commands.
//
// A configuration file is a YAML (or JSON) mapping whose keys mirror the
// command-line flags. A result bundle written by any command can be passed
// back as a configuration: its `config` member holds the fully resolved
// settings of the run.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "fogran/agents.hpp"
#include "fogran/environment.hpp"
#include "fogran/harness.hpp"
#include "fogran/io.hpp"
#include "fogran/oracle.hpp"

namespace fogran::cli {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kBundleFormat = "fogran-bundle v1";

using io::json;

/// Configuration problem; the message carries `file:line:` when the setting
/// came from a file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string method = "ql";
  std::optional<int> env;
  std::optional<double> rho;
  std::optional<std::string> env_file;
  int N = 15;
  int U = 10;
  double gamma = 0.7;
  double alpha = 0.01;
  std::string step_size = "constant";
  double epsilon = 0.0;
  int nstep = 1;
  bool first_visit = false;
  std::string expectation = "true_pmf";
  double theta = 1.0;
  std::optional<int> threshold;
  std::optional<std::string> table;
  long episodes = 20000;  // training budget
  long eval_episodes = 10000;
  long max_steps = 0;
  int window = 500;
  double tolerance = 0.01;
  std::uint64_t seed = 1;
  int seeds = 1;
  std::string out = "out";
  double r_sh = 2.0;
  double r_sl = -1.0;
  double r_rh = -2.0;
  double r_rl = 1.0;
  std::string u_h = "mean";  // "mean" or a number
  std::vector<int> envs;      // sweep; empty means 1..19
  std::vector<std::string> policies;  // sweep; empty means all RL methods and thresholds 1..U
  std::string baseline = "thld:4";
  int threads = 0;
  long step_cap = kDefaultStepCap;

  // Where each key was set, for diagnostics.
  std::string source;
  std::map<std::string, int> lines;

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    auto it = lines.find(key);
    if (it != lines.end()) throw ConfigError(source + ":" + std::to_string(it->second) + ": " + msg);
    throw ConfigError(msg);
  }
};

namespace detail {

template <class T>
T scalar(const YAML::Node& node, const std::string& key, const RunConfig& cfg) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    cfg.fail(key, "invalid value for '" + key + "'");
  }
}

template <class T>
std::vector<T> list(const YAML::Node& node, const std::string& key, const RunConfig& cfg) {
  std::vector<T> out;
  if (node.IsSequence()) {
    for (const auto& item : node) out.push_back(scalar<T>(item, key, cfg));
    return out;
  }
  std::stringstream ss(scalar<std::string>(node, key, cfg));
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if constexpr (std::is_same_v<T, std::string>) {
      out.push_back(item);
    } else {
      try {
        std::size_t used = 0;
        const T v = static_cast<T>(std::stol(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
        out.push_back(v);
      } catch (const std::exception&) {
        cfg.fail(key, "invalid entry '" + item + "' in '" + key + "'");
      }
    }
  }
  return out;
}

}  // namespace detail

/// Splits "1,7,19" style lists.
inline std::vector<int> parse_int_list(const std::string& text) {
  RunConfig scratch;
  return detail::list<int>(YAML::Node(text), "list", scratch);
}

inline std::vector<std::string> parse_string_list(const std::string& text) {
  RunConfig scratch;
  return detail::list<std::string>(YAML::Node(text), "list", scratch);
}

/// Applies the keys of a YAML/JSON mapping to `cfg`. Unknown keys are errors.
inline void apply_config(RunConfig& cfg, const YAML::Node& root, const std::string& source) {
  cfg.source = source;
  YAML::Node node = root;
  if (node.IsMap() && node["format"] && node["config"]) node = node["config"];
  if (!node.IsMap()) throw ConfigError(source + ": configuration must be a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    const YAML::Node& v = kv.second;
    cfg.lines[key] = kv.first.Mark().line + 1;
    using detail::scalar;
    auto opt_null = [&] { return v.IsNull(); };
    if (key == "method") cfg.method = scalar<std::string>(v, key, cfg);
    else if (key == "env") cfg.env = opt_null() ? std::nullopt : std::optional(scalar<int>(v, key, cfg));
    else if (key == "rho") cfg.rho = opt_null() ? std::nullopt : std::optional(scalar<double>(v, key, cfg));
    else if (key == "env_file") cfg.env_file = opt_null() ? std::nullopt : std::optional(scalar<std::string>(v, key, cfg));
    else if (key == "N") cfg.N = scalar<int>(v, key, cfg);
    else if (key == "U") cfg.U = scalar<int>(v, key, cfg);
    else if (key == "gamma") cfg.gamma = scalar<double>(v, key, cfg);
    else if (key == "alpha") cfg.alpha = scalar<double>(v, key, cfg);
    else if (key == "step_size") cfg.step_size = scalar<std::string>(v, key, cfg);
    else if (key == "epsilon") cfg.epsilon = scalar<double>(v, key, cfg);
    else if (key == "nstep") cfg.nstep = scalar<int>(v, key, cfg);
    else if (key == "first_visit") cfg.first_visit = scalar<bool>(v, key, cfg);
    else if (key == "expectation") cfg.expectation = scalar<std::string>(v, key, cfg);
    else if (key == "theta") cfg.theta = scalar<double>(v, key, cfg);
    else if (key == "threshold") cfg.threshold = opt_null() ? std::nullopt : std::optional(scalar<int>(v, key, cfg));
    else if (key == "table") cfg.table = opt_null() ? std::nullopt : std::optional(scalar<std::string>(v, key, cfg));
    else if (key == "episodes") cfg.episodes = scalar<long>(v, key, cfg);
    else if (key == "eval_episodes") cfg.eval_episodes = scalar<long>(v, key, cfg);
    else if (key == "max_steps") cfg.max_steps = scalar<long>(v, key, cfg);
    else if (key == "window") cfg.window = scalar<int>(v, key, cfg);
    else if (key == "tolerance") cfg.tolerance = scalar<double>(v, key, cfg);
    else if (key == "seed") cfg.seed = scalar<std::uint64_t>(v, key, cfg);
    else if (key == "seeds") cfg.seeds = scalar<int>(v, key, cfg);
    else if (key == "out") cfg.out = scalar<std::string>(v, key, cfg);
    else if (key == "r_sh") cfg.r_sh = scalar<double>(v, key, cfg);
    else if (key == "r_sl") cfg.r_sl = scalar<double>(v, key, cfg);
    else if (key == "r_rh") cfg.r_rh = scalar<double>(v, key, cfg);
    else if (key == "r_rl") cfg.r_rl = scalar<double>(v, key, cfg);
    else if (key == "u_h") cfg.u_h = scalar<std::string>(v, key, cfg);
    else if (key == "envs") cfg.envs = detail::list<int>(v, key, cfg);
    else if (key == "policies") cfg.policies = detail::list<std::string>(v, key, cfg);
    else if (key == "baseline") cfg.baseline = scalar<std::string>(v, key, cfg);
    else if (key == "threads") cfg.threads = scalar<int>(v, key, cfg);
    else if (key == "step_cap") cfg.step_cap = scalar<long>(v, key, cfg);
    else cfg.fail(key, "unknown key '" + key + "'");
  }
}

inline RunConfig load_config(const std::filesystem::path& path) {
  RunConfig cfg;
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::ParserException& e) {
    throw ConfigError(path.string() + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  } catch (const YAML::Exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  apply_config(cfg, root, path.string());
  return cfg;
}

inline RunConfig parse_config(const std::string& text, const std::string& source = "<config>") {
  RunConfig cfg;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  apply_config(cfg, root, source);
  return cfg;
}

/// The environment named by the config plus a short label for file names.
struct ResolvedEnv {
  EnvironmentPMF pmf;
  std::string label;
  int catalog_index = 0;  // 0 when not from the catalog
};

inline ResolvedEnv resolve_environment(const RunConfig& cfg) {
  const int chosen = (cfg.env ? 1 : 0) + (cfg.rho ? 1 : 0) + (cfg.env_file ? 1 : 0);
  if (chosen > 1) cfg.fail(cfg.env_file ? "env_file" : "rho", "choose only one of env, rho, env_file");
  if (cfg.env_file) {
    EnvironmentPMF pmf = [&] {
      try {
        return io::load_environment(*cfg.env_file);
      } catch (const std::exception& e) {
        cfg.fail("env_file", e.what());
      }
    }();
    if (pmf.levels() != cfg.U)
      cfg.fail("env_file", "environment file has " + std::to_string(pmf.levels()) +
                               " levels but U = " + std::to_string(cfg.U));
    return {std::move(pmf), "custom", 0};
  }
  if (cfg.rho) {
    if (cfg.U != kCatalogLevels) cfg.fail("rho", "--rho environments have U = 10");
    if (!(*cfg.rho >= 0.0 && *cfg.rho <= 1.0)) cfg.fail("rho", "rho must lie in [0, 1]");
    return {build_environment(*cfg.rho, base_environment()), "rho" + io::fmt(*cfg.rho, 2), 0};
  }
  const int k = cfg.env.value_or(7);
  if (k < 1 || k > kCatalogSize) cfg.fail("env", "env must be in 1..19");
  if (cfg.U != kCatalogLevels) cfg.fail("U", "catalog environments have U = 10; use env_file");
  return {catalog(k), "e" + std::to_string(k), k};
}

inline double resolve_u_h(const RunConfig& cfg, const EnvironmentPMF& env) {
  if (cfg.u_h == "mean") return env.mean();
  try {
    std::size_t used = 0;
    const double v = std::stod(cfg.u_h, &used);
    if (used != cfg.u_h.size()) throw std::invalid_argument(cfg.u_h);
    return v;
  } catch (const std::exception&) {
    cfg.fail("u_h", "u_h must be 'mean' or a number");
  }
}

inline MdpConfig mdp_of(const RunConfig& cfg) { return {cfg.N, cfg.U, cfg.gamma}; }

inline AgentConfig agent_of(const RunConfig& cfg) {
  AgentConfig a;
  a.method = parse_method(cfg.method);
  a.gamma = cfg.gamma;
  a.alpha = cfg.alpha;
  a.step_size = cfg.step_size == "harmonic" ? StepSize::harmonic : StepSize::constant;
  a.epsilon = cfg.epsilon;
  a.n = cfg.nstep;
  a.first_visit = cfg.first_visit;
  a.expectation = cfg.expectation == "empirical" ? Expectation::empirical : Expectation::true_pmf;
  return a;
}

inline ConvergenceSpec stop_of(const RunConfig& cfg) {
  return {cfg.window, cfg.tolerance, cfg.episodes, cfg.max_steps};
}

inline RewardScheme scheme_of(const RunConfig& cfg, double u_h) {
  return {cfg.r_sh, cfg.r_sl, cfg.r_rh, cfg.r_rl, u_h};
}

/// Checks every setting before any computation starts.
inline void validate(const RunConfig& cfg) {
  auto check = [&](bool ok, const std::string& key, const std::string& msg) {
    if (!ok) cfg.fail(key, msg);
  };
  try {
    parse_method(cfg.method);
  } catch (const std::exception& e) {
    cfg.fail("method", e.what());
  }
  check(cfg.N >= 1, "N", "N must be >= 1");
  check(cfg.U >= 2, "U", "U must be >= 2");
  check(cfg.gamma >= 0.0 && cfg.gamma <= 1.0, "gamma", "gamma must lie in [0, 1]");
  check(cfg.alpha > 0.0 && cfg.alpha <= 1.0, "alpha", "alpha must lie in (0, 1]");
  check(cfg.step_size == "constant" || cfg.step_size == "harmonic", "step_size",
        "step_size must be 'constant' or 'harmonic'");
  check(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0, "epsilon", "epsilon must lie in [0, 1]");
  check(cfg.nstep >= 1, "nstep", "nstep must be >= 1");
  check(cfg.expectation == "true_pmf" || cfg.expectation == "empirical", "expectation",
        "expectation must be 'true_pmf' or 'empirical'");
  check(cfg.theta >= 0.0, "theta", "theta must be >= 0");
  check(!cfg.threshold || (*cfg.threshold >= 1 && *cfg.threshold <= cfg.U), "threshold",
        "threshold must lie in [1, U]");
  check(cfg.episodes >= 1, "episodes", "episodes must be >= 1");
  check(cfg.eval_episodes >= 1, "eval_episodes", "eval_episodes must be >= 1");
  check(cfg.max_steps >= 0, "max_steps", "max_steps must be >= 0");
  check(cfg.window >= 1, "window", "window must be >= 1");
  check(cfg.tolerance > 0.0, "tolerance", "tolerance must be > 0");
  check(cfg.seeds >= 1, "seeds", "seeds must be >= 1");
  check(cfg.threads >= 0, "threads", "threads must be >= 0");
  check(cfg.step_cap >= 1, "step_cap", "step_cap must be >= 1");
  for (int k : cfg.envs) check(k >= 1 && k <= kCatalogSize, "envs", "envs entries must be in 1..19");
  for (const auto& p : cfg.policies) {
    try {
      const PolicySpec spec = parse_policy(p);
      check(spec.kind != PolicySpec::Kind::threshold || (spec.thld >= 1 && spec.thld <= cfg.U),
            "policies", "threshold policy '" + p + "' outside [1, U]");
    } catch (const std::invalid_argument& e) {
      cfg.fail("policies", e.what());
    }
  }
  try {
    parse_policy(cfg.baseline);
  } catch (const std::invalid_argument& e) {
    cfg.fail("baseline", e.what());
  }
  const ResolvedEnv env = resolve_environment(cfg);
  resolve_u_h(cfg, env.pmf);
}

/// The effective configuration, defaults and u_h resolved.
inline json echo(const RunConfig& cfg, std::optional<double> resolved_u_h) {
  json j;
  j["method"] = cfg.method;
  j["env"] = cfg.env ? json(*cfg.env) : json(nullptr);
  j["rho"] = cfg.rho ? json(*cfg.rho) : json(nullptr);
  j["env_file"] = cfg.env_file ? json(*cfg.env_file) : json(nullptr);
  j["N"] = cfg.N;
  j["U"] = cfg.U;
  j["gamma"] = cfg.gamma;
  j["alpha"] = cfg.alpha;
  j["step_size"] = cfg.step_size;
  j["epsilon"] = cfg.epsilon;
  j["nstep"] = cfg.nstep;
  j["first_visit"] = cfg.first_visit;
  j["expectation"] = cfg.expectation;
  j["theta"] = cfg.theta;
  j["threshold"] = cfg.threshold ? json(*cfg.threshold) : json(nullptr);
  j["table"] = cfg.table ? json(*cfg.table) : json(nullptr);
  j["episodes"] = cfg.episodes;
  j["eval_episodes"] = cfg.eval_episodes;
  j["max_steps"] = cfg.max_steps;
  j["window"] = cfg.window;
  j["tolerance"] = cfg.tolerance;
  j["seed"] = cfg.seed;
  j["seeds"] = cfg.seeds;
  j["out"] = cfg.out;
  j["r_sh"] = cfg.r_sh;
  j["r_sl"] = cfg.r_sl;
  j["r_rh"] = cfg.r_rh;
  j["r_rl"] = cfg.r_rl;
  // Written as a string so the echo loads back through the same key.
  j["u_h"] = cfg.u_h;
  if (resolved_u_h) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", *resolved_u_h);
    j["u_h"] = buf;
  }
  j["envs"] = cfg.envs;
  j["policies"] = cfg.policies;
  j["baseline"] = cfg.baseline;
  j["threads"] = cfg.threads;
  j["step_cap"] = cfg.step_cap;
  return j;
}

inline std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json bundle(const std::string& command, const RunConfig& cfg,
                   std::optional<double> resolved_u_h, json result) {
  json j;
  j["format"] = kBundleFormat;
  j["command"] = command;
  j["config"] = echo(cfg, resolved_u_h);
  j["provenance"] = json{{"seed", cfg.seed}, {"version", kVersion}, {"timestamp", timestamp_utc()}};
  j["result"] = std::move(result);
  return j;
}

inline std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
  return std::filesystem::path(cfg.out) / name;
}

// --------------------------------------------------------------------------
// Commands

struct TrainOutcome {
  io::LearnedTable table;
  ConvergenceTrace trace;
  std::filesystem::path table_file;
  std::filesystem::path trace_file;
  std::filesystem::path bundle_file;
};

inline TrainOutcome cmd_train(const RunConfig& cfg, std::ostream& log = std::cout) {
  validate(cfg);
  const ResolvedEnv env = resolve_environment(cfg);
  const double u_h = resolve_u_h(cfg, env.pmf);
  const MdpConfig mdp = mdp_of(cfg);
  const AgentConfig agent = agent_of(cfg);
  const RewardScheme scheme = scheme_of(cfg, u_h);
  Rng rng = make_rng(cfg.seed, {1});

  TrainOutcome out;
  out.table.method = agent.method;
  out.table.agent = agent;
  out.table.mdp = mdp;
  out.table.scheme = scheme;
  if (agent.method == Method::mc) {
    auto res = mc_train(env.pmf, agent, scheme, mdp, stop_of(cfg), rng);
    out.table.v = std::move(res.table);
    out.table.env_probs = env.pmf.probs();
    out.trace = std::move(res.trace);
  } else {
    auto res = td_train(env.pmf, agent, scheme, mdp, stop_of(cfg), rng);
    out.table.q = std::move(res.table);
    out.trace = std::move(res.trace);
  }

  const std::string stem = cfg.method + "_" + env.label;
  out.table_file = out_path(cfg, stem + ".table");
  out.trace_file = out_path(cfg, stem + "_trace.csv");
  out.bundle_file = out_path(cfg, stem + "_bundle.json");
  io::save_table(out.table_file, out.table);
  io::write_file(out.trace_file, io::trace_csv(out.trace));
  json result{{"converged", out.trace.converged},
              {"converged_at", out.trace.converged ? json(out.trace.converged_at) : json(nullptr)},
              {"episodes", out.trace.episodes()},
              {"steps", out.trace.steps},
              {"table_file", out.table_file.filename().string()},
              {"trace_file", out.trace_file.filename().string()}};
  io::write_file(out.bundle_file, bundle("train", cfg, u_h, result).dump(2) + "\n");

  log << "trained " << cfg.method << " on " << env.label << ": " << out.trace.episodes()
      << " episodes, " << out.trace.steps << " steps, "
      << (out.trace.converged ? "converged at episode " + std::to_string(out.trace.converged_at)
                              : std::string("not converged"))
      << "\n  table: " << out.table_file.string() << "\n  trace: " << out.trace_file.string()
      << "\n";
  return out;
}

/// Resolves a `--table` argument, accepting a path without the extension.
inline std::filesystem::path table_path(const RunConfig& cfg, const std::string& arg) {
  for (const std::filesystem::path& p :
       {std::filesystem::path(arg), std::filesystem::path(arg + ".table"),
        out_path(cfg, arg), out_path(cfg, arg + ".table")})
    if (std::filesystem::exists(p)) return p;
  cfg.fail("table", "table file '" + arg + "' not found");
}

inline io::LearnedTable load_matching_table(const RunConfig& cfg) {
  const io::LearnedTable t = io::load_table(table_path(cfg, *cfg.table));
  if (t.mdp.N != cfg.N || t.mdp.U != cfg.U)
    cfg.fail("table", "table shape (N=" + std::to_string(t.mdp.N) + ", U=" +
                          std::to_string(t.mdp.U) + ") does not match config (N=" +
                          std::to_string(cfg.N) + ", U=" + std::to_string(cfg.U) + ")");
  return t;
}

inline MetricReport cmd_evaluate(const RunConfig& cfg, std::ostream& log = std::cout) {
  validate(cfg);
  if (cfg.threshold.has_value() == cfg.table.has_value())
    throw ConfigError("evaluate needs exactly one of --threshold or --table");
  const ResolvedEnv env = resolve_environment(cfg);
  const double u_h = resolve_u_h(cfg, env.pmf);
  const MdpConfig mdp = mdp_of(cfg);
  const RewardScheme scheme = scheme_of(cfg, u_h);

  Policy policy;
  std::string label;
  if (cfg.threshold) {
    const int U = cfg.U;
    const ThresholdPolicy p{*cfg.threshold};
    policy = [U, p](int s) { return threshold_action(decode_state(s, U).u, p); };
    label = "thld:" + std::to_string(*cfg.threshold);
  } else {
    const io::LearnedTable t = load_matching_table(cfg);
    policy = t.policy();
    label = std::string(to_string(t.method)) + ":" +
            std::filesystem::path(*cfg.table).filename().string();
  }
  Rng rng = make_rng(cfg.seed, {2});
  const MetricReport rep =
      estimate_R(policy, env.pmf, mdp, scheme, cfg.theta, cfg.eval_episodes, rng, cfg.step_cap);

  const auto csv = out_path(cfg, "evaluate.csv");
  std::string text = std::filesystem::exists(csv)
                         ? io::read_file(csv)
                         : "policy,env,rho,seed,episodes,theta,mean_R,ci95_R,mean_T\n";
  text += label + "," + env.label + "," + io::fmt(env.pmf.rho(), 4) + "," +
          std::to_string(cfg.seed) + "," + std::to_string(rep.episodes) + "," +
          io::fmt(cfg.theta) + "," + io::fmt(rep.mean_R) + "," + io::fmt(rep.ci95_R) + "," +
          io::fmt(rep.mean_T) + "\n";
  io::write_file(csv, text);

  log << label << " on " << env.label << ": mean_R = " << io::fmt(rep.mean_R, 4) << " +/- "
      << io::fmt(rep.ci95_R, 4) << ", mean_T = " << io::fmt(rep.mean_T, 4) << " ("
      << rep.episodes << " episodes)\n";
  return rep;
}

inline SweepConfig sweep_config_of(const RunConfig& cfg) {
  SweepConfig s;
  s.envs = cfg.envs;
  if (s.envs.empty())
    for (int k = 1; k <= kCatalogSize; ++k) s.envs.push_back(k);
  if (cfg.policies.empty()) {
    for (Method m : {Method::ql, Method::esarsa, Method::sarsa, Method::mc})
      s.policies.push_back(PolicySpec::learned(m));
    for (int t = 1; t <= cfg.U; ++t) s.policies.push_back(PolicySpec::threshold(t));
  } else {
    for (const auto& p : cfg.policies) s.policies.push_back(parse_policy(p));
  }
  s.seeds = cfg.seeds;
  s.episodes = cfg.eval_episodes;
  s.theta = cfg.theta;
  s.mdp = mdp_of(cfg);
  s.agent = agent_of(cfg);
  s.rewards = scheme_of(cfg, 0.0);
  if (cfg.u_h != "mean") s.u_h = resolve_u_h(cfg, base_environment());
  s.stop = stop_of(cfg);
  s.root_seed = cfg.seed;
  s.threads = cfg.threads;
  s.step_cap = cfg.step_cap;
  return s;
}

inline SweepResult cmd_sweep(const RunConfig& cfg, std::ostream& log = std::cout) {
  validate(cfg);
  if (cfg.U != kCatalogLevels) cfg.fail("U", "sweeps run over the catalog, which has U = 10");
  const SweepConfig sc = sweep_config_of(cfg);
  const SweepResult result = sweep(sc);
  const std::string baseline = parse_policy(cfg.baseline).id();

  io::write_file(out_path(cfg, "sweep.csv"), io::sweep_csv(result));
  io::write_file(out_path(cfg, "sweep.json"), io::to_json(result).dump(2) + "\n");
  const auto ratios = ratio_table(result, baseline);
  io::write_file(out_path(cfg, "ratio.csv"), io::ratio_csv(ratios, baseline));
  int failed = 0;
  for (const auto& r : result.rows) failed += r.failed ? 1 : 0;
  json res{{"rows", result.rows.size()}, {"failed_cells", failed},
           {"files", json::array({"sweep.csv", "sweep.json", "ratio.csv"})}};
  io::write_file(out_path(cfg, "sweep_bundle.json"),
                 bundle("sweep", cfg, std::nullopt, res).dump(2) + "\n");

  log << "sweep: " << result.rows.size() << " cells (" << failed << " failed) -> "
      << out_path(cfg, "sweep.csv").string() << "\n";
  for (const auto& r : result.rows)
    if (r.failed) log << "  failed: env " << r.env << " " << r.policy << " seed " << r.seed
                      << ": " << r.error << "\n";
  return result;
}

struct OracleOutcome {
  OracleResult oracle;
  std::optional<PolicyGap> gap;
};

inline OracleOutcome cmd_oracle(const RunConfig& cfg, std::ostream& log = std::cout) {
  validate(cfg);
  const ResolvedEnv env = resolve_environment(cfg);
  const double u_h = resolve_u_h(cfg, env.pmf);
  const MdpConfig mdp = mdp_of(cfg);
  const RewardScheme scheme = scheme_of(cfg, u_h);

  OracleOutcome out{dp_oracle(env.pmf, scheme, mdp), std::nullopt};
  const OracleResult& o = out.oracle;
  std::string vcsv = "state,b,u,V\n";
  std::string qcsv = "state,b,u,q_reject,q_serve,optimal\n";
  for (int s = 1; s <= mdp.num_states(); ++s) {
    const FnState st = decode_state(s, mdp);
    const std::string prefix =
        std::to_string(s) + "," + std::to_string(st.b) + "," + std::to_string(st.u) + ",";
    vcsv += prefix + io::fmt(o.V(s), 12) + "\n";
    qcsv += prefix + io::fmt(o.Q(s, Action::reject), 12) + "," + io::fmt(o.Q(s, Action::serve), 12) +
            "," + (is_terminal(st, mdp) ? "terminal" : std::string(to_string(greedy_q_action(s, o.Q)))) +
            "\n";
  }
  const std::string stem = "oracle_" + env.label;
  io::write_file(out_path(cfg, stem + "_V.csv"), vcsv);
  io::write_file(out_path(cfg, stem + "_Q.csv"), qcsv);

  json result{{"sweeps", o.sweeps},
              {"final_delta", o.deltas.back()},
              {"V_file", stem + "_V.csv"},
              {"Q_file", stem + "_Q.csv"}};
  log << "oracle on " << env.label << ": " << o.sweeps << " sweeps, final delta "
      << o.deltas.back() << "\n";

  if (cfg.table) {
    const io::LearnedTable t = load_matching_table(cfg);
    const QTable learned = t.q ? *t.q : lookahead_q(*t.v, env.pmf, t.scheme, t.mdp);
    out.gap = compare_to_oracle(learned, t.policy(), o, env.pmf, mdp);
    std::string report = "states,agreeing,agreement,q_sup_gap\n" + std::to_string(out.gap->states) +
                         "," + std::to_string(out.gap->agreeing) + "," +
                         io::fmt(out.gap->agreement()) + "," + io::fmt(out.gap->q_sup_gap) + "\n";
    io::write_file(out_path(cfg, stem + "_gap.csv"), report);
    result["gap"] = json{{"table", *cfg.table},
                         {"states", out.gap->states},
                         {"agreeing", out.gap->agreeing},
                         {"agreement", out.gap->agreement()},
                         {"q_sup_gap", out.gap->q_sup_gap}};
    log << "  greedy agreement on optimal-reachable states: " << out.gap->agreeing << "/"
        << out.gap->states << ", Q sup-norm gap " << io::fmt(out.gap->q_sup_gap, 4) << "\n";
  }
  io::write_file(out_path(cfg, stem + "_bundle.json"),
                 bundle("oracle", cfg, u_h, result).dump(2) + "\n");
  return out;
}

}  // namespace fogran::cli
