#pragma once

// Exact solution of the Bellman optimality equations by value iteration. With
// the utility PMF known, E_u[V*(s')] is a finite sum over the U levels, so the
// optimal tables can be computed directly and used as a reference for the
// model-free learners.

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "fogran/agents.hpp"
#include "fogran/environment.hpp"
#include "fogran/mdp.hpp"
#include "fogran/tables.hpp"

namespace fogran {

struct OracleResult {
  ValueTable V;
  QTable Q;
  int sweeps = 0;
  std::vector<double> deltas;  // sup-norm change of V per sweep
};

namespace detail {

inline void bellman_q(const ValueTable& V, const EnvironmentPMF& env, const RewardScheme& scheme,
                      const MdpConfig& mdp, QTable& Q) {
  std::vector<double> row_mean(static_cast<std::size_t>(mdp.N) + 1, 0.0);
  for (int b = 0; b <= mdp.N; ++b)
    row_mean[static_cast<std::size_t>(b)] = expected_value(V, b, env.probs());
  for (int b = 0; b < mdp.N; ++b) {
    for (int u = 1; u <= mdp.U; ++u) {
      const int s = encode_state(b, u, mdp.U);
      Q.set(s, Action::serve,
            serve_reward(u, scheme) + mdp.gamma * row_mean[static_cast<std::size_t>(b + 1)]);
      Q.set(s, Action::reject,
            reject_reward(u, scheme) + mdp.gamma * row_mean[static_cast<std::size_t>(b)]);
    }
  }
}

}  // namespace detail

/// Synchronous value iteration until the sup-norm sweep delta drops below
/// `tolerance`. Throws if `max_sweeps` is exhausted first.
inline OracleResult dp_oracle(const EnvironmentPMF& env, const RewardScheme& scheme,
                              const MdpConfig& mdp, double tolerance = 1e-10,
                              int max_sweeps = 100000) {
  mdp.validate();
  if (env.levels() != mdp.U) throw std::invalid_argument("dp_oracle: environment has wrong U");
  OracleResult out{ValueTable(mdp), QTable(mdp), 0, {}};
  ValueTable next(mdp);
  while (true) {
    if (out.sweeps >= max_sweeps)
      throw std::runtime_error("dp_oracle: value iteration did not converge");
    detail::bellman_q(out.V, env, scheme, mdp, out.Q);
    for (int s = 1; s <= mdp.U * mdp.N; ++s)
      next.set(s, std::max(out.Q(s, Action::serve), out.Q(s, Action::reject)));
    const double delta = next.max_abs_diff(out.V);
    out.V = next;
    ++out.sweeps;
    out.deltas.push_back(delta);
    if (delta < tolerance) break;
  }
  detail::bellman_q(out.V, env, scheme, mdp, out.Q);
  return out;
}

/// Non-terminal states visited with positive probability when following
/// `policy` from b = 0.
inline std::vector<int> reachable_states(const std::function<Action(int)>& policy,
                                         const EnvironmentPMF& env, const MdpConfig& mdp) {
  std::vector<char> seen(static_cast<std::size_t>(mdp.num_states()) + 1, 0);
  std::queue<int> frontier;
  auto visit = [&](int b) {
    if (b >= mdp.N) return;
    for (int u = 1; u <= mdp.U; ++u) {
      if (env.prob(u) <= 0.0) continue;
      const int s = encode_state(b, u, mdp.U);
      if (!seen[static_cast<std::size_t>(s)]) {
        seen[static_cast<std::size_t>(s)] = 1;
        frontier.push(s);
      }
    }
  };
  visit(0);
  while (!frontier.empty()) {
    const int s = frontier.front();
    frontier.pop();
    const FnState st = decode_state(s, mdp);
    visit(policy(s) == Action::serve ? st.b + 1 : st.b);
  }
  std::vector<int> out;
  for (int s = 1; s <= mdp.num_states(); ++s)
    if (seen[static_cast<std::size_t>(s)]) out.push_back(s);
  return out;
}

/// Action values implied by a state-value table through one-step lookahead.
inline QTable lookahead_q(const ValueTable& V, const EnvironmentPMF& env,
                          const RewardScheme& scheme, const MdpConfig& mdp) {
  QTable Q(mdp);
  detail::bellman_q(V, env, scheme, mdp, Q);
  return Q;
}

/// Agreement between a learned greedy policy and the optimal one, measured on
/// states reachable under the optimal policy.
struct PolicyGap {
  int states = 0;
  int agreeing = 0;
  double q_sup_gap = 0.0;  // max |Q - Q*| over reachable (state, action) pairs

  double agreement() const { return states == 0 ? 1.0 : static_cast<double>(agreeing) / states; }
};

inline PolicyGap compare_to_oracle(const QTable& learned,
                                   const std::function<Action(int)>& learned_policy,
                                   const OracleResult& oracle, const EnvironmentPMF& env,
                                   const MdpConfig& mdp) {
  const auto optimal = [&](int s) { return greedy_q_action(s, oracle.Q); };
  PolicyGap gap;
  for (int s : reachable_states(optimal, env, mdp)) {
    ++gap.states;
    if (learned_policy(s) == optimal(s)) ++gap.agreeing;
    for (Action a : {Action::reject, Action::serve})
      gap.q_sup_gap = std::max(gap.q_sup_gap, std::abs(learned(s, a) - oracle.Q(s, a)));
  }
  return gap;
}

}  // namespace fogran
