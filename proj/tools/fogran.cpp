// Command-line driver: train, evaluate, sweep, oracle.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fogran/cli.hpp"

namespace {

using fogran::cli::RunConfig;

// Flag values kept separately so that a config file can be loaded first and
// only the flags actually given override it.
struct Flags {
  std::optional<std::string> config, method, env_file, out, table, envs, policies, baseline, uh,
      step_size;
  std::optional<int> env, N, U, nstep, threshold, seeds, threads, window;
  std::optional<double> rho, gamma, alpha, epsilon, theta, tolerance;
  std::optional<long> episodes, eval_episodes, max_steps;
  std::optional<std::uint64_t> seed;
  bool first_visit = false;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "YAML or JSON configuration (a result bundle also works)");
  app->add_option("--method", f.method, "mc | ql | esarsa | sarsa");
  app->add_option("--env", f.env, "catalog environment index 1..19");
  app->add_option("--rho", f.rho, "custom high-utility mass built from the base environment");
  app->add_option("--env-file", f.env_file, "JSON file with a 'probs' array");
  app->add_option("--N", f.N, "server capacity");
  app->add_option("--U", f.U, "number of utility levels");
  app->add_option("--gamma", f.gamma, "discount factor");
  app->add_option("--alpha", f.alpha, "step size");
  app->add_option("--step-size", f.step_size, "constant | harmonic");
  app->add_option("--epsilon", f.epsilon, "exploration rate");
  app->add_option("--nstep", f.nstep, "bootstrap horizon for TD methods");
  app->add_flag("--first-visit", f.first_visit, "first-visit Monte Carlo");
  app->add_option("--theta", f.theta, "weight on rejected requests in the score");
  app->add_option("--episodes", f.episodes, "training episode budget");
  app->add_option("--eval-episodes", f.eval_episodes, "evaluation episodes");
  app->add_option("--max-steps", f.max_steps, "training step budget (0 = none)");
  app->add_option("--window", f.window, "convergence window in episodes");
  app->add_option("--tolerance", f.tolerance, "convergence tolerance");
  app->add_option("--seed", f.seed, "root seed");
  app->add_option("--uh", f.uh, "high-utility cut: 'mean' or a number");
  app->add_option("--out", f.out, "output directory");
}

template <class T>
void put(const std::optional<T>& v, T& dst) {
  if (v) dst = *v;
}

template <class T>
void put_opt(const std::optional<T>& v, std::optional<T>& dst) {
  if (v) dst = *v;
}

RunConfig resolve(const Flags& f) {
  RunConfig c = f.config ? fogran::cli::load_config(*f.config) : RunConfig{};
  put(f.method, c.method);
  if (f.env || f.rho || f.env_file) c.env.reset(), c.rho.reset(), c.env_file.reset();
  put_opt(f.env, c.env);
  put_opt(f.rho, c.rho);
  put_opt(f.env_file, c.env_file);
  put(f.N, c.N);
  put(f.U, c.U);
  put(f.gamma, c.gamma);
  put(f.alpha, c.alpha);
  put(f.step_size, c.step_size);
  put(f.epsilon, c.epsilon);
  put(f.nstep, c.nstep);
  if (f.first_visit) c.first_visit = true;
  put(f.theta, c.theta);
  if (f.threshold || f.table) c.threshold.reset(), c.table.reset();
  put_opt(f.threshold, c.threshold);
  put_opt(f.table, c.table);
  put(f.episodes, c.episodes);
  put(f.eval_episodes, c.eval_episodes);
  put(f.max_steps, c.max_steps);
  put(f.window, c.window);
  put(f.tolerance, c.tolerance);
  put(f.seed, c.seed);
  put(f.seeds, c.seeds);
  put(f.out, c.out);
  put(f.uh, c.u_h);
  if (f.envs) c.envs = fogran::cli::parse_int_list(*f.envs);
  if (f.policies) c.policies = fogran::cli::parse_string_list(*f.policies);
  put(f.baseline, c.baseline);
  put(f.threads, c.threads);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Admission control for a fog node: tabular learners, threshold baselines, exact oracle"};
  app.require_subcommand(1);
  Flags f;

  auto* train = app.add_subcommand("train", "train one learner and save its table");
  add_common(train, f);

  auto* evaluate = app.add_subcommand("evaluate", "score a threshold policy or a saved table");
  add_common(evaluate, f);
  evaluate->add_option("--threshold", f.threshold, "serve iff utility >= threshold");
  evaluate->add_option("--table", f.table, "saved table file");

  auto* sweep = app.add_subcommand("sweep", "train and score policies over catalog environments");
  add_common(sweep, f);
  sweep->add_option("--envs", f.envs, "comma-separated catalog indices (default 1..19)");
  sweep->add_option("--policies", f.policies, "comma-separated: ql,esarsa,sarsa,mc,thld:k");
  sweep->add_option("--seeds", f.seeds, "independent seeds per cell");
  sweep->add_option("--baseline", f.baseline, "policy in the ratio denominator");
  sweep->add_option("--threads", f.threads, "worker threads (0 = all cores)");

  auto* oracle = app.add_subcommand("oracle", "solve the model exactly by value iteration");
  add_common(oracle, f);
  oracle->add_option("--table", f.table, "saved table to compare against the optimum");

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = resolve(f);
    if (train->parsed()) fogran::cli::cmd_train(cfg);
    else if (evaluate->parsed()) fogran::cli::cmd_evaluate(cfg);
    else if (sweep->parsed()) fogran::cli::cmd_sweep(cfg);
    else if (oracle->parsed()) fogran::cli::cmd_oracle(cfg);
  } catch (const fogran::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
