#pragma once

// State space, reward model and transition dynamics of the fog-node
// admission-control MDP. A fog node owns N resource blocks (RBs); requests
// arrive one at a time carrying a discrete utility level u in 1..U and the
// node either serves (consuming one RB) or rejects them. An episode ends when
// all N blocks are occupied.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fogran {

enum class Action : std::uint8_t { reject = 0, serve = 1 };

inline constexpr int kNumActions = 2;

inline constexpr int index_of(Action a) { return static_cast<int>(a); }

inline std::string_view to_string(Action a) {
  return a == Action::serve ? "serve" : "reject";
}

struct MdpConfig {
  int N = 15;          // resource blocks
  int U = 10;          // utility levels
  double gamma = 0.7;  // discount

  void validate() const {
    if (N < 1) throw std::invalid_argument("MdpConfig: N must be >= 1");
    if (U < 2) throw std::invalid_argument("MdpConfig: U must be >= 2");
    if (!(gamma >= 0.0 && gamma <= 1.0))
      throw std::invalid_argument("MdpConfig: gamma must lie in [0, 1]");
  }

  /// Number of encoded states, U * (N + 1).
  int num_states() const { return U * (N + 1); }
};

/// Decoded state: b occupied blocks, u utility of the pending request.
struct FnState {
  int b = 0;
  int u = 1;

  friend bool operator==(const FnState&, const FnState&) = default;
};

/// s = U*b + u. Valid range is [1, U*(N+1)].
inline int encode_state(int b, int u, int U) {
  if (U < 1) throw std::domain_error("encode_state: U must be positive");
  if (b < 0) throw std::domain_error("encode_state: b must be >= 0");
  if (u < 1 || u > U) throw std::domain_error("encode_state: u outside [1, U]");
  return U * b + u;
}

/// Range-checked against N as well.
inline int encode_state(FnState st, const MdpConfig& mdp) {
  if (st.b > mdp.N) throw std::domain_error("encode_state: b exceeds N");
  return encode_state(st.b, st.u, mdp.U);
}

inline FnState decode_state(int s, int U) {
  if (U < 1) throw std::domain_error("decode_state: U must be positive");
  if (s < 1) throw std::domain_error("decode_state: state index must be >= 1");
  return FnState{(s - 1) / U, (s - 1) % U + 1};
}

inline FnState decode_state(int s, const MdpConfig& mdp) {
  if (s > mdp.num_states())
    throw std::domain_error("decode_state: state index exceeds U*(N+1)");
  return decode_state(s, mdp.U);
}

inline bool is_terminal(FnState st, const MdpConfig& mdp) { return st.b >= mdp.N; }

inline bool is_terminal(int s, const MdpConfig& mdp) {
  return is_terminal(decode_state(s, mdp), mdp);
}

/// Immediate reward magnitudes. A request is "high utility" when u >= u_h.
struct RewardScheme {
  double r_sh = 2.0;   // serve high
  double r_sl = -1.0;  // serve low
  double r_rh = -2.0;  // reject high
  double r_rl = 1.0;   // reject low
  double u_h = 6.0;

  bool is_high(int u) const { return static_cast<double>(u) >= u_h; }
};

inline double reward(int u, Action a, const RewardScheme& scheme) {
  const bool high = scheme.is_high(u);
  if (a == Action::serve) return high ? scheme.r_sh : scheme.r_sl;
  return high ? scheme.r_rh : scheme.r_rl;
}

/// Reward for serving / rejecting the current request, as used by the
/// one-step lookahead in the Monte Carlo action rule.
inline double serve_reward(int u, const RewardScheme& scheme) {
  return reward(u, Action::serve, scheme);
}
inline double reject_reward(int u, const RewardScheme& scheme) {
  return reward(u, Action::reject, scheme);
}

struct Transition {
  int s = 0;
  Action a = Action::reject;
  double r = 0.0;
  int s_next = 0;
  bool terminal = false;
};

/// Advances one request. `u_next` is the utility of the next arriving request.
inline Transition step(int s, Action a, int u_next, const RewardScheme& scheme,
                       const MdpConfig& mdp) {
  const FnState cur = decode_state(s, mdp);
  if (is_terminal(cur, mdp))
    throw std::logic_error("step: cannot act from a terminal state");
  if (u_next < 1 || u_next > mdp.U)
    throw std::domain_error("step: u_next outside [1, U]");
  const int b_next = cur.b + (a == Action::serve ? 1 : 0);
  Transition t;
  t.s = s;
  t.a = a;
  t.r = reward(cur.u, a, scheme);
  t.s_next = encode_state(b_next, u_next, mdp.U);
  t.terminal = b_next == mdp.N;
  return t;
}

/// Parameters of the continuous utility model u = kappa * mu^zeta / l^beta,
/// with mu = C / omega the achievable-to-required throughput ratio.
struct UtilityParams {
  double kappa = 1.0;
  double zeta = 0.0;
  double beta = 1.0;
  double latency_ms = 1.0;   // l
  double throughput = 1.0;   // omega, required bits/s
  double capacity = 1.0;     // C, bits/s
};

inline double compute_utility(const UtilityParams& p) {
  if (p.kappa < 0.0 || p.zeta < 0.0 || p.beta < 0.0)
    throw std::domain_error("compute_utility: kappa, zeta, beta must be >= 0");
  if (!(p.latency_ms > 0.0))
    throw std::domain_error("compute_utility: latency must be positive");
  double throughput_term = 1.0;
  if (p.zeta > 0.0) {
    if (!(p.throughput > 0.0))
      throw std::domain_error("compute_utility: throughput requirement must be positive");
    if (p.capacity < 0.0) throw std::domain_error("compute_utility: negative capacity");
    throughput_term = std::pow(p.capacity / p.throughput, p.zeta);
  }
  return p.kappa * throughput_term / std::pow(p.latency_ms, p.beta);
}

/// Equal-width binning of [low, high] onto levels 1..U; x is clamped first and
/// x == high maps to U.
inline int discretize_utility(double x, int U, double low, double high) {
  if (U < 2) throw std::domain_error("discretize_utility: U must be >= 2");
  if (!(high > low) || !std::isfinite(low) || !std::isfinite(high))
    throw std::domain_error("discretize_utility: need finite bounds with high > low");
  if (std::isnan(x)) throw std::domain_error("discretize_utility: NaN utility");
  if (x <= low) return 1;
  if (x >= high) return U;
  const double frac = (x - low) / (high - low);
  const int bin = static_cast<int>(std::floor(frac * U)) + 1;
  return bin > U ? U : bin;
}

inline double discounted_return(std::span<const double> rewards, double gamma) {
  // Horner evaluation from the tail.
  double g = 0.0;
  for (auto it = rewards.rbegin(); it != rewards.rend(); ++it) g = *it + gamma * g;
  return g;
}

}  // namespace fogran
