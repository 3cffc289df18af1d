#pragma once

// Evaluation harness: episode rollouts, the served-utility-minus-idle-time
// metric R = E[sum u_m - theta (T - M)], and grid sweeps over environments
// and policies.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "fogran/agents.hpp"
#include "fogran/environment.hpp"
#include "fogran/mdp.hpp"
#include "fogran/rng.hpp"

namespace fogran {

using Policy = std::function<Action(int)>;

inline constexpr long kDefaultStepCap = 1'000'000;

struct EpisodeRecord {
  std::vector<int> served_utilities;
  long T = 0;  // requests processed
  int M = 0;   // requests served
  std::vector<Transition> transitions;  // filled only on request

  double served_utility() const {
    double sum = 0.0;
    for (int u : served_utilities) sum += u;
    return sum;
  }
  double score(double theta) const { return served_utility() - theta * static_cast<double>(T - M); }
};

/// Rolls out one episode from b = 0. `next_utility()` yields the utility of
/// each arriving request, starting with u_0.
template <class NextUtility>
EpisodeRecord run_episode_from(const Policy& policy, NextUtility&& next_utility,
                               const MdpConfig& mdp, const RewardScheme& scheme,
                               long step_cap = kDefaultStepCap, bool keep_transitions = false) {
  EpisodeRecord rec;
  rec.served_utilities.reserve(static_cast<std::size_t>(mdp.N));
  int s = encode_state(0, next_utility(), mdp.U);
  while (true) {
    if (rec.T >= step_cap)
      throw std::runtime_error("run_episode: step cap of " + std::to_string(step_cap) +
                               " requests reached before termination");
    const Action a = policy(s);
    const Transition t = step(s, a, next_utility(), scheme, mdp);
    ++rec.T;
    if (a == Action::serve) {
      rec.served_utilities.push_back(decode_state(s, mdp.U).u);
      ++rec.M;
    }
    if (keep_transitions) rec.transitions.push_back(t);
    if (t.terminal) break;
    s = t.s_next;
  }
  return rec;
}

inline EpisodeRecord run_episode(const Policy& policy, const EnvironmentPMF& env,
                                 const MdpConfig& mdp, const RewardScheme& scheme, Rng& rng,
                                 long step_cap = kDefaultStepCap, bool keep_transitions = false) {
  return run_episode_from(
      policy, [&] { return env.sample(rng); }, mdp, scheme, step_cap, keep_transitions);
}

struct MetricReport {
  double mean_R = 0.0;
  double mean_T = 0.0;
  double ci95_R = 0.0;  // half-width, 1.96 * sample sd / sqrt(n)
  double ci95_T = 0.0;
  long episodes = 0;
  double theta = 1.0;
};

/// Welford accumulator for a mean and its 95% half-width.
class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  long count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double ci95() const { return n_ > 1 ? 1.96 * std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

 private:
  long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

inline MetricReport summarize(const std::vector<EpisodeRecord>& records, double theta) {
  if (records.empty()) throw std::invalid_argument("summarize: no episodes");
  RunningStats r, t;
  for (const auto& rec : records) {
    r.add(rec.score(theta));
    t.add(static_cast<double>(rec.T));
  }
  return {r.mean(), t.mean(), r.ci95(), t.ci95(), r.count(), theta};
}

/// Episode i draws its utilities from a stream derived from one base draw of
/// `rng` and i, so every policy evaluated from the same `rng` state sees the
/// same request sequence in each episode.
inline MetricReport estimate_R(const Policy& policy, const EnvironmentPMF& env,
                               const MdpConfig& mdp, const RewardScheme& scheme, double theta,
                               long episodes, Rng& rng, long step_cap = kDefaultStepCap) {
  if (episodes < 1) throw std::invalid_argument("estimate_R: need at least one episode");
  const std::uint64_t base = rng();
  RunningStats r, t;
  for (long i = 0; i < episodes; ++i) {
    Rng stream = make_rng(base, {static_cast<std::uint64_t>(i)});
    const EpisodeRecord rec = run_episode(policy, env, mdp, scheme, stream, step_cap);
    r.add(rec.score(theta));
    t.add(static_cast<double>(rec.T));
  }
  return {r.mean(), t.mean(), r.ci95(), t.ci95(), r.count(), theta};
}

/// a.mean_R / b.mean_R; empty when the baseline is zero.
inline std::optional<double> performance_ratio(const MetricReport& a, const MetricReport& b) {
  if (b.mean_R == 0.0) return std::nullopt;
  return a.mean_R / b.mean_R;
}

// --------------------------------------------------------------------------
// Policies as sweep grid entries

struct PolicySpec {
  enum class Kind { threshold, learned } kind = Kind::threshold;
  int thld = 4;
  Method method = Method::ql;

  static PolicySpec threshold(int t) { return {Kind::threshold, t, Method::ql}; }
  static PolicySpec learned(Method m) { return {Kind::learned, 0, m}; }

  std::string id() const {
    return kind == Kind::threshold ? "thld:" + std::to_string(thld) : std::string(to_string(method));
  }

  friend bool operator==(const PolicySpec&, const PolicySpec&) = default;
};

/// Accepts "thld:<k>" (or "thld<k>") and method names.
inline PolicySpec parse_policy(const std::string& text) {
  std::string digits;
  if (text.rfind("thld:", 0) == 0)
    digits = text.substr(5);
  else if (text.rfind("thld", 0) == 0)
    digits = text.substr(4);
  else
    return PolicySpec::learned(parse_method(text));
  if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
    throw std::invalid_argument("bad threshold policy '" + text + "'");
  return PolicySpec::threshold(std::stoi(digits));
}

/// A trained (or parameter-free) policy ready for evaluation with epsilon = 0.
struct TrainedPolicy {
  PolicySpec spec;
  Policy act;
  ConvergenceTrace trace;  // empty for thresholds
  std::shared_ptr<const QTable> q;
  std::shared_ptr<const ValueTable> v;
};

inline TrainedPolicy train_policy(const PolicySpec& spec, const EnvironmentPMF& env,
                                  const AgentConfig& base, const RewardScheme& scheme,
                                  const MdpConfig& mdp, const ConvergenceSpec& stop, Rng& rng) {
  TrainedPolicy out;
  out.spec = spec;
  if (spec.kind == PolicySpec::Kind::threshold) {
    if (spec.thld < 1 || spec.thld > mdp.U)
      throw std::invalid_argument("threshold " + std::to_string(spec.thld) + " outside [1, U]");
    const int U = mdp.U;
    const ThresholdPolicy p{spec.thld};
    out.act = [U, p](int s) { return threshold_action(decode_state(s, U).u, p); };
    return out;
  }
  AgentConfig cfg = base;
  cfg.method = spec.method;
  cfg.gamma = mdp.gamma;
  if (spec.method == Method::mc) {
    auto res = mc_train(env, cfg, scheme, mdp, stop, rng);
    out.trace = std::move(res.trace);
    out.v = std::make_shared<const ValueTable>(std::move(res.table));
    out.act = [V = out.v, scheme, probs = env.probs(), g = mdp.gamma](int s) {
      return mc_action(s, *V, scheme, probs, g);
    };
  } else {
    auto res = td_train(env, cfg, scheme, mdp, stop, rng);
    out.trace = std::move(res.trace);
    out.q = std::make_shared<const QTable>(std::move(res.table));
    out.act = [Q = out.q](int s) { return greedy_q_action(s, *Q); };
  }
  return out;
}

// --------------------------------------------------------------------------
// Sweeps

struct SweepConfig {
  std::vector<int> envs;  // catalog indices
  std::vector<PolicySpec> policies;
  int seeds = 1;
  long episodes = 10000;  // evaluation episodes per cell
  double theta = 1.0;
  MdpConfig mdp{};
  AgentConfig agent{};
  RewardScheme rewards{};
  std::optional<double> u_h;  // empty: the environment's mean utility
  ConvergenceSpec stop{};
  std::uint64_t root_seed = 1;
  int threads = 0;  // 0: hardware concurrency
  long step_cap = kDefaultStepCap;
};

struct SweepRow {
  int env = 0;
  double rho = 0.0;
  std::string policy;
  int seed = 0;
  MetricReport report;
  long train_episodes = 0;
  long train_episodes_to_converge = -1;  // -1: thresholds or not converged
  bool failed = false;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // env-major, then policy, then seed

  const SweepRow* find(int env, const std::string& policy, int seed) const {
    for (const auto& r : rows)
      if (r.env == env && r.policy == policy && r.seed == seed) return &r;
    return nullptr;
  }
};

inline RewardScheme scheme_for(const SweepConfig& cfg, const EnvironmentPMF& env) {
  RewardScheme s = cfg.rewards;
  s.u_h = cfg.u_h ? *cfg.u_h : env.mean();
  return s;
}

/// Trains each learned policy per (environment, seed) and evaluates every
/// policy with estimate_R. Cell streams depend only on the cell's identity,
/// and all policies in an (environment, seed) pair share their evaluation
/// stream. A failing cell is flagged without stopping the grid.
inline SweepResult sweep(const SweepConfig& cfg) {
  if (cfg.envs.empty() || cfg.policies.empty() || cfg.seeds < 1)
    throw std::invalid_argument("sweep: empty grid");
  cfg.mdp.validate();

  struct Cell {
    int env;
    std::size_t policy;
    int seed;
  };
  std::vector<Cell> cells;
  for (int e : cfg.envs)
    for (std::size_t p = 0; p < cfg.policies.size(); ++p)
      for (int s = 0; s < cfg.seeds; ++s) cells.push_back({e, p, s});

  SweepResult result;
  result.rows.resize(cells.size());

  auto run_cell = [&](std::size_t i) {
    const Cell& c = cells[i];
    SweepRow& row = result.rows[i];
    row.env = c.env;
    row.rho = catalog_rho(c.env);
    row.policy = cfg.policies[c.policy].id();
    row.seed = c.seed;
    try {
      const EnvironmentPMF env = catalog(c.env);
      const RewardScheme scheme = scheme_for(cfg, env);
      const auto e = static_cast<std::uint64_t>(c.env);
      const auto s = static_cast<std::uint64_t>(c.seed);
      Rng train_rng = make_rng(cfg.root_seed, {1, e, stable_hash(row.policy), s});
      const TrainedPolicy trained =
          train_policy(cfg.policies[c.policy], env, cfg.agent, scheme, cfg.mdp, cfg.stop, train_rng);
      row.train_episodes = trained.trace.episodes();
      if (trained.trace.converged) row.train_episodes_to_converge = trained.trace.converged_at;
      Rng eval_rng = make_rng(cfg.root_seed, {2, e, s});
      row.report = estimate_R(trained.act, env, cfg.mdp, scheme, cfg.theta, cfg.episodes, eval_rng,
                              cfg.step_cap);
    } catch (const std::exception& ex) {
      row.failed = true;
      row.error = ex.what();
    }
  };

  unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                     : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(cells.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
    return result;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(i);
    });
  pool.clear();
  return result;
}

/// Ratio of each row's mean_R to the baseline policy's in the same
/// (environment, seed).
struct RatioRow {
  int env = 0;
  double rho = 0.0;
  std::string policy;
  int seed = 0;
  std::optional<double> ratio;
};

inline std::vector<RatioRow> ratio_table(const SweepResult& result, const std::string& baseline) {
  std::vector<RatioRow> out;
  for (const auto& row : result.rows) {
    if (row.policy == baseline) continue;
    RatioRow r{row.env, row.rho, row.policy, row.seed, std::nullopt};
    const SweepRow* base = result.find(row.env, baseline, row.seed);
    if (base && !base->failed && !row.failed) r.ratio = performance_ratio(row.report, base->report);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace fogran
