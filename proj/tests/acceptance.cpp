// Acceptance checks. `acceptance --criterion k` runs one check, no argument
// runs all ten. Each prints one line: "criterion k: PASS|FAIL <details>".
// Reference values are recomputed here by independent code where possible.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fogran/agents.hpp"
#include "fogran/environment.hpp"
#include "fogran/harness.hpp"
#include "fogran/io.hpp"
#include "fogran/oracle.hpp"

using namespace fogran;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string details;
};

std::string f(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

// Reference utility distributions, copied by hand: columns E1, E4, E7, E10,
// E15, E19, rows P(u=1..10), then rho and mean utility.
struct Column {
  int k;
  std::array<double, 10> p;
  double rho;
  double u_bar;
};
const std::array<Column, 6> kTable{{
    {1, {0.015, 0.073, 0.365, 0.292, 0.205, 0.014, 0.013, 0.011, 0.009, 0.003}, 0.05, 3.82},
    {4, {0.012, 0.062, 0.308, 0.246, 0.172, 0.057, 0.051, 0.046, 0.034, 0.012}, 0.20, 4.4},
    {7, {0.01, 0.05, 0.25, 0.2, 0.14, 0.1, 0.09, 0.08, 0.06, 0.02}, 0.35, 4.97},
    {10, {0.008, 0.038, 0.192, 0.154, 0.108, 0.142, 0.129, 0.114, 0.086, 0.029}, 0.50, 5.55},
    {15, {0.004, 0.019, 0.096, 0.077, 0.054, 0.214, 0.193, 0.171, 0.129, 0.043}, 0.75, 6.5},
    {19, {0.001, 0.004, 0.019, 0.015, 0.011, 0.271, 0.244, 0.217, 0.163, 0.055}, 0.95, 7.27},
}};

const MdpConfig kMdp{15, 10, 0.7};

RewardScheme mean_scheme(const EnvironmentPMF& env) {
  RewardScheme s;
  s.u_h = env.mean();
  return s;
}

// ---------------------------------------------------------------- 1

Outcome criterion1() {
  int checked = 0, bad = 0;
  double worst_p = 0.0, worst_u = 0.0;
  for (const Column& c : kTable) {
    const EnvironmentPMF e = catalog(c.k);
    for (int u = 1; u <= 10; ++u) {
      const double d = std::abs(e.prob(u) - c.p[static_cast<std::size_t>(u - 1)]);
      worst_p = std::max(worst_p, d);
      bad += d > 0.001;
      ++checked;
    }
    const double du = std::abs(e.mean() - c.u_bar);
    worst_u = std::max(worst_u, du);
    bad += du > 0.01;
    ++checked;
  }
  return {bad == 0, std::to_string(checked) + " values, worst |dp| = " + f(worst_p, 5) +
                        ", worst |d u_bar| = " + f(worst_u, 5)};
}

// ---------------------------------------------------------------- 2

// Random PMF with full support: normalized exponentials (a flat Dirichlet).
EnvironmentPMF random_pmf(std::uint64_t seed, int U) {
  Rng r = make_rng(seed, {99});
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> p(static_cast<std::size_t>(U));
  double total = 0.0;
  for (double& x : p) total += (x = expo(r) + 1e-3);
  for (double& x : p) x /= total;
  return EnvironmentPMF(p);
}

// Exact action values of the epsilon-greedy policy derived from `greedy`.
QTable evaluate_epsilon_greedy(const QTable& greedy, double eps, const EnvironmentPMF& env,
                               const RewardScheme& s, const MdpConfig& mdp) {
  QTable q(mdp);
  for (int it = 0; it < 5000; ++it) {
    QTable next(mdp);
    for (int st = 1; st <= mdp.U * mdp.N; ++st) {
      const FnState x = decode_state(st, mdp);
      for (Action a : {Action::reject, Action::serve}) {
        const int b2 = a == Action::serve ? x.b + 1 : x.b;
        double tail = 0.0;
        if (b2 < mdp.N) {
          for (int u = 1; u <= mdp.U; ++u) {
            const int s2 = encode_state(b2, u, mdp.U);
            const bool g_serve = greedy(s2, Action::serve) > greedy(s2, Action::reject);
            const double p_serve = g_serve ? 1 - eps / 2 : eps / 2;
            tail += env.prob(u) *
                    (p_serve * q(s2, Action::serve) + (1 - p_serve) * q(s2, Action::reject));
          }
        }
        next.set(st, a, reward(x.u, a, s) + mdp.gamma * tail);
      }
    }
    const double d = next.max_abs_diff(q);
    q = next;
    if (d < 1e-12) break;
  }
  return q;
}

// Sup gap over (state, action) pairs reachable under the optimal policy.
double reachable_gap(const QTable& a, const QTable& b, const OracleResult& o,
                     const EnvironmentPMF& env, const MdpConfig& mdp) {
  double gap = 0.0;
  for (int s : reachable_states([&](int st) { return greedy_q_action(st, o.Q); }, env, mdp))
    for (Action act : {Action::reject, Action::serve})
      gap = std::max(gap, std::abs(a(s, act) - b(s, act)));
  return gap;
}

Outcome criterion2() {
  const MdpConfig mdp{3, 4, 0.7};
  const double eps = 0.1;
  std::map<std::string, double> worst_gap, worst_agree, worst_own;
  double structural = 0.0;  // exact |Q^{eps-greedy of Q*} - Q*| on reachable pairs
  for (const char* m : {"ql", "esarsa", "sarsa", "mc"}) {
    worst_gap[m] = 0.0;
    worst_agree[m] = 1.0;
    worst_own[m] = 0.0;
  }
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const EnvironmentPMF env = random_pmf(seed, mdp.U);
    const RewardScheme s = mean_scheme(env);
    const OracleResult o = dp_oracle(env, s, mdp);
    structural = std::max(
        structural, reachable_gap(evaluate_epsilon_greedy(o.Q, eps, env, s, mdp), o.Q, o, env, mdp));
    for (Method m : {Method::ql, Method::esarsa, Method::sarsa}) {
      AgentConfig cfg;
      cfg.method = m;
      cfg.epsilon = eps;
      cfg.step_size = StepSize::harmonic;
      Rng r = make_rng(seed, {2, static_cast<std::uint64_t>(m)});
      const auto res = td_train(env, cfg, s, mdp, {500, 1e-12, 1000000, 200000}, r);
      const PolicyGap g = compare_to_oracle(
          res.table, [&](int st) { return greedy_q_action(st, res.table); }, o, env, mdp);
      const std::string name(to_string(m));
      worst_gap[name] = std::max(worst_gap[name], g.q_sup_gap);
      worst_agree[name] = std::min(worst_agree[name], g.agreement());
      // Diagnostic: distance to the exact values of the policy being followed.
      const QTable own = m == Method::ql ? o.Q : evaluate_epsilon_greedy(res.table, eps, env, s, mdp);
      worst_own[name] = std::max(worst_own[name], reachable_gap(res.table, own, o, env, mdp));
    }
    AgentConfig cfg;
    cfg.method = Method::mc;
    Rng r = make_rng(seed, {2, 0});
    const auto res = mc_train(env, cfg, s, mdp, {500, 1e-12, 1000000, 200000}, r);
    const QTable q = lookahead_q(res.table, env, s, mdp);
    const auto V = std::make_shared<const ValueTable>(res.table);
    const PolicyGap g = compare_to_oracle(
        q, [&](int st) { return mc_action(st, *V, s, env, mdp.gamma); }, o, env, mdp);
    worst_gap["mc"] = std::max(worst_gap["mc"], g.q_sup_gap);
    worst_agree["mc"] = std::min(worst_agree["mc"], g.agreement());
  }
  bool pass = true;
  std::string details;
  for (const char* m : {"ql", "esarsa", "sarsa", "mc"}) {
    pass = pass && worst_agree[m] == 1.0 && worst_gap[m] <= 0.05;
    details += std::string(m) + " agree " + f(100 * worst_agree[m], 1) + "% gap " + f(worst_gap[m]);
    if (std::string(m) == "esarsa" || std::string(m) == "sarsa")
      details += " (vs own eps-greedy values " + f(worst_own[m]) + ")";
    details += "; ";
  }
  return {pass, "worst over 10 PMFs: " + details +
                    "exact gap between Q* and the eps-greedy optimal policy's values " +
                    f(structural)};
}

// ---------------------------------------------------------------- 3

Outcome criterion3() {
  const EnvironmentPMF env = catalog(7);
  const RewardScheme s = mean_scheme(env);
  const OracleResult o = dp_oracle(env, s, kMdp);
  AgentConfig cfg;
  Rng r = make_rng(1, {1});
  const auto res = td_train(env, cfg, s, kMdp, {}, r);
  const PolicyGap g = compare_to_oracle(
      res.table, [&](int st) { return greedy_q_action(st, res.table); }, o, env, kMdp);
  const bool pass = o.sweeps < 200 && o.deltas.back() < 1e-10 && g.agreement() >= 0.95;
  return {pass, "oracle " + std::to_string(o.sweeps) + " sweeps, final delta " +
                    f(o.deltas.back() * 1e12, 2) + "e-12; QL greedy agreement " +
                    std::to_string(g.agreeing) + "/" + std::to_string(g.states) + " after " +
                    std::to_string(res.trace.episodes()) + " episodes"};
}

// ---------------------------------------------------------------- 4

Outcome criterion4() {
  const EnvironmentPMF env = catalog(7);
  AgentConfig cfg;
  cfg.method = Method::mc;
  Rng r = make_rng(1, {1});
  const auto res = mc_train(env, cfg, mean_scheme(env), kMdp, {}, r);
  const long at = res.trace.converged_at;
  // First episode of the final quiet window: where the trace crosses 0.01.
  const long crossing = res.trace.converged ? at - 500 + 1 : -1;
  const bool pass = res.trace.converged && at <= 20000 && crossing >= 2000 && crossing <= 15000;
  return {pass, "MC converged=" + std::string(res.trace.converged ? "yes" : "no") +
                    ", max delta < 0.01 from episode " + std::to_string(crossing) +
                    " (window satisfied at " + std::to_string(at) + ")"};
}

// ---------------------------------------------------------------- 5, 6, 9

const SweepResult& full_sweep() {
  static const SweepResult result = [] {
    SweepConfig c;
    for (int k = 1; k <= kCatalogSize; ++k) c.envs.push_back(k);
    c.policies.push_back(PolicySpec::learned(Method::ql));
    for (int t = 1; t <= 10; ++t) c.policies.push_back(PolicySpec::threshold(t));
    c.episodes = 10000;
    return sweep(c);
  }();
  return result;
}

Outcome criterion5() {
  const SweepResult& res = full_sweep();
  int violations = 0, strict_misses = 0;
  std::string first;
  for (int k = 1; k <= kCatalogSize; ++k) {
    const SweepRow* ql = res.find(k, "ql", 0);
    for (int t = 1; t <= 10; ++t) {
      const SweepRow* th = res.find(k, "thld:" + std::to_string(t), 0);
      const double margin = ql->report.ci95_R + th->report.ci95_R;
      const bool dominated = ql->report.mean_R >= th->report.mean_R - margin;
      const bool strict_needed = t <= 3 || t == 8 || t == 9;
      const bool strict = ql->report.mean_R > th->report.mean_R;
      if (!dominated) ++violations;
      if (strict_needed && !strict) ++strict_misses;
      if ((!dominated || (strict_needed && !strict)) && first.empty())
        first = "E" + std::to_string(k) + " thld" + std::to_string(t) + ": QL " +
                f(ql->report.mean_R, 2) + " vs " + f(th->report.mean_R, 2);
    }
  }
  const bool pass = violations == 0 && strict_misses == 0;
  return {pass, std::to_string(violations) + "/190 cells beyond CI, " +
                    std::to_string(strict_misses) + "/95 strict-dominance misses" +
                    (first.empty() ? "" : "; first: " + first)};
}

Outcome criterion6() {
  const SweepResult& res = full_sweep();
  bool low_ok = true, one_exact = true, rl_ok = true;
  double rl_min = 1e9, rl_max = 0.0, low_max = 0.0;
  std::string outside;
  for (int k = 1; k <= kCatalogSize; ++k) {
    for (int t = 1; t <= 3; ++t) {
      const double T = res.find(k, "thld:" + std::to_string(t), 0)->report.mean_T;
      low_ok = low_ok && T >= 15.0 && T <= 17.0;
      low_max = std::max(low_max, T);
    }
    one_exact = one_exact && res.find(k, "thld:1", 0)->report.mean_T == 15.0;
    const double T = res.find(k, "ql", 0)->report.mean_T;
    rl_min = std::min(rl_min, T);
    rl_max = std::max(rl_max, T);
    if (T < 21.0 || T > 33.0) {
      rl_ok = false;
      outside += " E" + std::to_string(k) + "=" + f(T, 1);
    }
  }
  return {low_ok && one_exact && rl_ok,
          "thld1-3 max mean_T " + f(low_max, 3) + ", thld1 exactly 15: " +
              (one_exact ? "yes" : "no") + ", QL mean_T range [" + f(rl_min, 1) + ", " +
              f(rl_max, 1) + "]" + (outside.empty() ? "" : ", outside [21, 33]:" + outside)};
}

Outcome criterion9() {
  const SweepResult& res = full_sweep();
  const auto rows = ratio_table(res, "thld:4");
  double sum = 0.0, e9 = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.policy != "ql" || !r.ratio) continue;
    sum += *r.ratio;
    ++n;
    if (r.env == 9) e9 = *r.ratio;
  }
  const double mean = n ? sum / n : 0.0;
  const bool pass = n == kCatalogSize && mean > 1.0 && std::abs(mean - 1.04) <= 0.03 &&
                    std::abs(e9 - 1.06) <= 0.03;
  return {pass, "mean QL/thld4 over 19 environments " + f(mean) + " (target 1.04 +/- 0.03), E9 " +
                    f(e9) + " (target 1.06 +/- 0.03)"};
}

// ---------------------------------------------------------------- 7

Outcome criterion7() {
  const EnvironmentPMF env = catalog(7);
  const double p10 = kTable[2].p[9];
  const double analytic = 15.0 / p10;
  const Policy thld10 = [](int s) { return threshold_action(decode_state(s, 10).u, {10}); };
  Rng r = make_rng(1, {7});
  const MetricReport rep = estimate_R(thld10, env, kMdp, mean_scheme(env), 1.0, 10000, r);
  const double rel = std::abs(rep.mean_T - analytic) / analytic;
  return {rel <= 0.05, "mean_T " + f(rep.mean_T, 2) + " vs analytic " + f(analytic, 1) + " (" +
                           f(100 * rel, 2) + "% off)"};
}

// ---------------------------------------------------------------- 8

Outcome criterion8() {
  int identical = 0;
  for (int k = 1; k <= kCatalogSize; ++k) {
    const EnvironmentPMF env = catalog(k);
    std::vector<std::string> tables;
    for (Method m : {Method::ql, Method::sarsa, Method::esarsa}) {
      AgentConfig cfg;
      cfg.method = m;
      Rng r = make_rng(1, {1});
      io::LearnedTable t;
      t.method = Method::ql;  // the label is not part of the learned values
      t.scheme = mean_scheme(env);
      t.q = td_train(env, cfg, t.scheme, kMdp, {}, r).table;
      tables.push_back(io::serialize_table(t));
    }
    identical += tables[0] == tables[1] && tables[0] == tables[2];
  }
  return {identical == kCatalogSize,
          std::to_string(identical) + "/19 environments with bit-identical QL, SARSA, E-SARSA tables"};
}

// ---------------------------------------------------------------- 10

int run_cli(const std::string& args, const fs::path& out) {
  const std::string cmd =
      std::string(FOGRAN_CLI) + " " + args + " --out " + out.string() + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  return fs::exists(p) ? io::read_file(p) : std::string("<missing>");
}

Outcome criterion10() {
  const std::vector<std::string> commands{
      "train --method mc --env 7 --seed 3",
      "train --method ql --env 7 --seed 3",
      "train --method esarsa --env 12 --epsilon 0.1 --nstep 3 --seed 3",
      "evaluate --threshold 4 --env 7 --seed 3",
      "evaluate --table ql_e7.table --env 7 --seed 3",
      "oracle --env 7 --table ql_e7.table",
      "sweep --envs 2,9 --policies ql,mc,thld:4 --seed 3"};
  const fs::path root = fs::temp_directory_path() / "fogran_acceptance_c10";
  fs::remove_all(root);
  std::array<fs::path, 2> dirs{root / "a", root / "b"};
  for (const auto& d : dirs) {
    fs::create_directories(d);
    for (const auto& c : commands) {
      std::string args = c;
      const auto at = args.find("ql_e7.table");
      if (at != std::string::npos) args.replace(at, 11, (d / "ql_e7.table").string());
      if (run_cli(args, d) != 0) return {false, "command failed: " + c};
    }
  }
  int compared = 0, differing = 0;
  std::string first;
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    const std::string ext = entry.path().extension().string();
    if (ext != ".csv" && ext != ".table") continue;
    ++compared;
    if (slurp(entry.path()) != slurp(dirs[1] / entry.path().filename())) {
      ++differing;
      if (first.empty()) first = entry.path().filename().string();
    }
  }
  fs::remove_all(root);
  return {compared > 0 && differing == 0,
          std::to_string(compared) + " CSV/table files from " + std::to_string(commands.size()) +
              " commands, " + std::to_string(differing) + " differ" +
              (first.empty() ? "" : " (first: " + first + ")")};
}

const std::array<std::function<Outcome()>, 10> kCriteria{
    criterion1, criterion2, criterion3, criterion4, criterion5,
    criterion6, criterion7, criterion8, criterion9, criterion10};

const std::array<const char*, 10> kNames{
    "catalog fidelity",       "oracle equivalence (N=3, U=4)", "full-scale oracle sanity",
    "MC convergence speed",   "dominance over thresholds",     "termination behavior",
    "threshold-10 pathology", "greedy policy identity",        "ratio versus threshold 4",
    "determinism"};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      which.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion k]...\n");
      return 2;
    }
  }
  if (which.empty())
    for (int k = 1; k <= 10; ++k) which.push_back(k);
  int failed = 0;
  for (int k : which) {
    if (k < 1 || k > 10) {
      std::fprintf(stderr, "no criterion %d\n", k);
      return 2;
    }
    Outcome o;
    try {
      o = kCriteria[static_cast<std::size_t>(k - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d: %s %s: %s\n", k, o.pass ? "PASS" : "FAIL",
                kNames[static_cast<std::size_t>(k - 1)], o.details.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
