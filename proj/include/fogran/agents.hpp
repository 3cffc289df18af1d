#pragma once

// Decision policies and learners: the fixed-threshold baseline, the Monte
// Carlo state-value learner with one-step lookahead actions, and the n-step
// temporal-difference family (Q-learning, Expected SARSA, SARSA).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fogran/environment.hpp"
#include "fogran/mdp.hpp"
#include "fogran/rng.hpp"
#include "fogran/tables.hpp"

namespace fogran {

enum class Method { mc, ql, esarsa, sarsa };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::mc: return "mc";
    case Method::ql: return "ql";
    case Method::esarsa: return "esarsa";
    case Method::sarsa: return "sarsa";
  }
  return "?";
}

inline Method parse_method(std::string_view name) {
  if (name == "mc") return Method::mc;
  if (name == "ql") return Method::ql;
  if (name == "esarsa") return Method::esarsa;
  if (name == "sarsa") return Method::sarsa;
  throw std::invalid_argument("unknown method '" + std::string(name) +
                              "' (expected mc, ql, esarsa or sarsa)");
}

/// How the Monte Carlo action rule evaluates E_u[V(s')].
enum class Expectation {
  true_pmf,   // the environment's PMF is known (simulation)
  empirical,  // running frequencies of the utilities observed so far
};

/// Step size for TD updates. `harmonic` uses max(alpha, 1/k) on the k-th
/// update of a (state, action) pair.
enum class StepSize { constant, harmonic };

struct AgentConfig {
  Method method = Method::ql;
  double gamma = 0.7;
  double alpha = 0.01;
  StepSize step_size = StepSize::constant;
  double epsilon = 0.0;
  int n = 1;
  bool first_visit = false;  // MC only
  Expectation expectation = Expectation::true_pmf;  // MC only

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0))
      throw std::invalid_argument("AgentConfig: gamma must lie in [0, 1]");
    if (!(alpha > 0.0 && alpha <= 1.0))
      throw std::invalid_argument("AgentConfig: alpha must lie in (0, 1]");
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
      throw std::invalid_argument("AgentConfig: epsilon must lie in [0, 1]");
    if (n < 1) throw std::invalid_argument("AgentConfig: n must be >= 1");
  }
};

/// Training stops once the sup-norm change of the table stayed below
/// `tolerance` for each of the last `window` episodes, or when a budget runs
/// out. A zero `max_steps` means no step budget.
struct ConvergenceSpec {
  int window = 500;
  double tolerance = 0.01;
  long max_episodes = 20000;
  long max_steps = 0;

  void validate() const {
    if (window < 1) throw std::invalid_argument("ConvergenceSpec: window must be >= 1");
    if (!(tolerance > 0.0)) throw std::invalid_argument("ConvergenceSpec: tolerance must be > 0");
    if (max_episodes < 1) throw std::invalid_argument("ConvergenceSpec: zero episode budget");
    if (max_steps < 0) throw std::invalid_argument("ConvergenceSpec: negative step budget");
  }
};

/// Per-episode sup-norm table change plus the stopping outcome.
struct ConvergenceTrace {
  std::vector<double> max_delta;
  bool converged = false;
  long converged_at = -1;  // episode count when the window criterion first held
  long steps = 0;

  long episodes() const { return static_cast<long>(max_delta.size()); }
};

namespace detail {

/// Sliding-window maximum over the trace tail.
class WindowMonitor {
 public:
  explicit WindowMonitor(const ConvergenceSpec& spec) : spec_(spec) {}

  bool push(ConvergenceTrace& trace, double delta) {
    trace.max_delta.push_back(delta);
    if (delta >= spec_.tolerance) last_loud_ = trace.episodes();
    if (trace.episodes() - last_loud_ >= spec_.window) {
      trace.converged = true;
      trace.converged_at = trace.episodes();
      return true;
    }
    return false;
  }

 private:
  ConvergenceSpec spec_;
  long last_loud_ = 0;
};

}  // namespace detail

// --------------------------------------------------------------------------
// Fixed-threshold baseline

struct ThresholdPolicy {
  int thld = 5;
};

/// Serve iff u >= thld.
inline Action threshold_action(int u, ThresholdPolicy p) {
  return u >= p.thld ? Action::serve : Action::reject;
}

// --------------------------------------------------------------------------
// Monte Carlo action rule

/// E_u[V(U*b + u)] for a fixed occupancy b.
inline double expected_value(const ValueTable& V, int b, std::span<const double> probs) {
  double e = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (probs[i] != 0.0) e += probs[i] * V.at(b, static_cast<int>(i) + 1);
  return e;
}

/// One-step lookahead: serve iff r_s + gamma E_u[V(s'_serve)] is strictly
/// larger than r_r + gamma E_u[V(s'_reject)].
inline Action mc_action(int s, const ValueTable& V, const RewardScheme& scheme,
                        std::span<const double> probs, double gamma) {
  const FnState st = decode_state(s, V.U());
  if (st.b >= V.N()) throw std::logic_error("mc_action: terminal state");
  const double serve = serve_reward(st.u, scheme) + gamma * expected_value(V, st.b + 1, probs);
  const double reject = reject_reward(st.u, scheme) + gamma * expected_value(V, st.b, probs);
  return serve > reject ? Action::serve : Action::reject;
}

inline Action mc_action(int s, const ValueTable& V, const RewardScheme& scheme,
                        const EnvironmentPMF& env, double gamma) {
  return mc_action(s, V, scheme, env.probs(), gamma);
}

/// Running utility frequencies, for acting without knowledge of the PMF.
class PmfEstimator {
 public:
  explicit PmfEstimator(int U) : counts_(static_cast<std::size_t>(U), 0), probs_(counts_.size()) {
    std::fill(probs_.begin(), probs_.end(), 1.0 / U);
  }

  void observe(int u) {
    ++counts_.at(static_cast<std::size_t>(u - 1));
    ++total_;
    for (std::size_t i = 0; i < counts_.size(); ++i)
      probs_[i] = static_cast<double>(counts_[i]) / static_cast<double>(total_);
  }

  std::span<const double> probs() const { return probs_; }

 private:
  std::vector<std::uint64_t> counts_;
  std::vector<double> probs_;
  std::uint64_t total_ = 0;
};

// --------------------------------------------------------------------------
// Action-value policies

/// Serve iff Q(s, serve) > Q(s, reject); ties reject.
inline Action greedy_q_action(int s, const QTable& Q) {
  return Q(s, Action::serve) > Q(s, Action::reject) ? Action::serve : Action::reject;
}

/// Always consumes one uniform draw, and one more when exploring, so that
/// methods sharing a stream stay in lockstep.
inline Action epsilon_greedy(int s, const QTable& Q, double epsilon, Rng& rng) {
  const bool explore = uniform01(rng) < epsilon;
  if (explore) return coin_flip(rng) ? Action::serve : Action::reject;
  return greedy_q_action(s, Q);
}

/// Action probabilities of the epsilon-greedy policy at s, indexed by action.
inline std::array<double, kNumActions> epsilon_greedy_probs(int s, const QTable& Q,
                                                            double epsilon) {
  std::array<double, kNumActions> p{};
  p.fill(epsilon / kNumActions);
  p[static_cast<std::size_t>(index_of(greedy_q_action(s, Q)))] += 1.0 - epsilon;
  return p;
}

/// The state the n-step target bootstraps from.
struct Bootstrap {
  int state = 0;
  Action next_action = Action::reject;  // SARSA only
  bool terminal = false;
};

/// sum_j gamma^j r_j + gamma^n B, with B chosen by the method and zero at a
/// terminal bootstrap state.
inline double n_step_target(std::span<const double> rewards, const Bootstrap& boot,
                            const QTable& Q, Method method, double gamma, double epsilon) {
  if (rewards.empty()) throw std::logic_error("n_step_target: empty reward window");
  double discounted = 0.0;
  double weight = 1.0;
  for (double r : rewards) {
    discounted += weight * r;
    weight *= gamma;
  }
  if (boot.terminal) return discounted;
  double tail = 0.0;
  switch (method) {
    case Method::ql:
      tail = std::max(Q(boot.state, Action::serve), Q(boot.state, Action::reject));
      break;
    case Method::esarsa: {
      const auto p = epsilon_greedy_probs(boot.state, Q, epsilon);
      tail = p[0] * Q(boot.state, Action::reject) + p[1] * Q(boot.state, Action::serve);
      break;
    }
    case Method::sarsa:
      tail = Q(boot.state, boot.next_action);
      break;
    case Method::mc:
      throw std::invalid_argument("n_step_target: Monte Carlo has no bootstrap target");
  }
  return discounted + weight * tail;
}

inline void q_update(QTable& Q, int s, Action a, double target, double alpha) {
  if (Q.is_terminal(s)) throw std::logic_error("q_update: terminal state");
  const double q = Q(s, a);
  Q.set(s, a, q + alpha * (target - q));
}

// --------------------------------------------------------------------------
// Training

struct ValueResult {
  ValueTable table;
  ConvergenceTrace trace;
};

struct QResult {
  QTable table;
  ConvergenceTrace trace;
};

/// Monte Carlo control: each episode acts through the lookahead rule on the
/// current V (random action with probability epsilon), then appends every
/// visited state's realized return and resets V(s) to the average.
inline ValueResult mc_train(const EnvironmentPMF& env, const AgentConfig& cfg,
                            const RewardScheme& scheme, const MdpConfig& mdp,
                            const ConvergenceSpec& stop, Rng& rng) {
  cfg.validate();
  mdp.validate();
  stop.validate();
  if (env.levels() != mdp.U) throw std::invalid_argument("mc_train: environment has wrong U");

  ValueResult out{ValueTable(mdp), {}};
  ValueTable& V = out.table;
  detail::WindowMonitor monitor(stop);
  PmfEstimator estimate(mdp.U);
  const bool online = cfg.expectation == Expectation::empirical;

  std::vector<int> states;
  std::vector<double> rewards;
  std::vector<double> before;
  std::vector<char> seen(static_cast<std::size_t>(mdp.num_states()) + 1);

  auto draw = [&] {
    const int u = env.sample(rng);
    if (online) estimate.observe(u);
    return u;
  };

  for (long episode = 0; episode < stop.max_episodes; ++episode) {
    states.clear();
    rewards.clear();
    int s = encode_state(0, draw(), mdp.U);
    while (true) {
      const std::span<const double> probs = online ? estimate.probs() : env.probs();
      Action a = mc_action(s, V, scheme, probs, cfg.gamma);
      if (uniform01(rng) < cfg.epsilon) a = coin_flip(rng) ? Action::serve : Action::reject;
      const Transition t = step(s, a, draw(), scheme, mdp);
      states.push_back(s);
      rewards.push_back(t.r);
      ++out.trace.steps;
      if (t.terminal) break;
      s = t.s_next;
    }

    before.assign(states.size(), 0.0);
    for (std::size_t i = 0; i < states.size(); ++i) before[i] = V(states[i]);

    std::vector<double> returns(states.size());
    double g = 0.0;
    for (std::size_t i = states.size(); i-- > 0;) {
      g = rewards[i] + cfg.gamma * g;
      returns[i] = g;
    }
    std::fill(seen.begin(), seen.end(), 0);
    for (std::size_t i = 0; i < states.size(); ++i) {
      auto& flag = seen[static_cast<std::size_t>(states[i])];
      if (cfg.first_visit && flag) continue;
      flag = 1;
      V.record_return(states[i], returns[i]);
    }

    double delta = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i)
      delta = std::max(delta, std::abs(V(states[i]) - before[i]));
    if (monitor.push(out.trace, delta)) break;
    if (stop.max_steps > 0 && out.trace.steps >= stop.max_steps) break;
  }
  return out;
}

/// n-step TD control over a continuing stream of episodes. The action for
/// s_{t+1} is drawn before Q(s_tau, a_tau) is updated, for every method.
inline QResult td_train(const EnvironmentPMF& env, const AgentConfig& cfg,
                        const RewardScheme& scheme, const MdpConfig& mdp,
                        const ConvergenceSpec& stop, Rng& rng) {
  cfg.validate();
  mdp.validate();
  stop.validate();
  if (cfg.method == Method::mc) throw std::invalid_argument("td_train: use mc_train for mc");
  if (env.levels() != mdp.U) throw std::invalid_argument("td_train: environment has wrong U");

  QResult out{QTable(mdp), {}};
  QTable& Q = out.table;
  detail::WindowMonitor monitor(stop);

  struct Pending {
    int s;
    Action a;
    double r;
  };
  std::deque<Pending> window;
  std::vector<std::uint64_t> visits(Q.size(), 0);
  std::vector<double> rewards;
  rewards.reserve(static_cast<std::size_t>(cfg.n));

  auto update_front = [&](const Bootstrap& boot) {
    rewards.clear();
    for (const auto& p : window) rewards.push_back(p.r);
    const double target = n_step_target(rewards, boot, Q, cfg.method, cfg.gamma, cfg.epsilon);
    const Pending& head = window.front();
    double alpha = cfg.alpha;
    if (cfg.step_size == StepSize::harmonic) {
      const auto k = ++visits[static_cast<std::size_t>(head.s - 1) * kNumActions +
                              static_cast<std::size_t>(index_of(head.a))];
      alpha = std::max(alpha, 1.0 / static_cast<double>(k));
    }
    q_update(Q, head.s, head.a, target, alpha);
    window.pop_front();
  };

  bool out_of_steps = false;
  for (long episode = 0; episode < stop.max_episodes && !out_of_steps; ++episode) {
    const QTable before = Q;
    int s = encode_state(0, env.sample(rng), mdp.U);
    Action a = epsilon_greedy(s, Q, cfg.epsilon, rng);
    while (true) {
      const Transition t = step(s, a, env.sample(rng), scheme, mdp);
      window.push_back({s, a, t.r});
      ++out.trace.steps;
      if (t.terminal) {
        while (!window.empty()) update_front(Bootstrap{t.s_next, Action::reject, true});
        break;
      }
      const Action next = epsilon_greedy(t.s_next, Q, cfg.epsilon, rng);
      if (static_cast<int>(window.size()) == cfg.n)
        update_front(Bootstrap{t.s_next, next, false});
      s = t.s_next;
      a = next;
      if (stop.max_steps > 0 && out.trace.steps >= stop.max_steps) {
        out_of_steps = true;
        break;
      }
    }
    if (monitor.push(out.trace, Q.max_abs_diff(before))) break;
  }
  return out;
}

}  // namespace fogran
