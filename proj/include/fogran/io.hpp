#pragma once

// Persistence: learned-table files, environment records, sweep CSV/JSON.
//
// Table files start with the magic line `fogran-table v1` followed by a JSON
// document. Doubles are written with round-trip precision, so a reloaded
// table is bit-identical to the trained one.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fogran/agents.hpp"
#include "fogran/environment.hpp"
#include "fogran/harness.hpp"
#include "fogran/tables.hpp"
#include "json.hpp"

namespace fogran::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kTableMagic = "fogran-table v1";

/// Fixed-point formatting used by every CSV writer.
inline std::string fmt(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// --------------------------------------------------------------------------
// Environments

inline json to_json(const EnvironmentPMF& env) {
  return json{{"probs", env.probs()}};
}

inline EnvironmentPMF environment_from_json(const json& j) {
  if (!j.is_object() || !j.contains("probs") || !j["probs"].is_array())
    throw std::invalid_argument("environment record needs a 'probs' array");
  return EnvironmentPMF(j["probs"].get<std::vector<double>>());
}

inline void save_environment(const std::filesystem::path& path, const EnvironmentPMF& env) {
  write_file(path, to_json(env).dump(2) + "\n");
}

inline EnvironmentPMF load_environment(const std::filesystem::path& path) {
  try {
    return environment_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

// --------------------------------------------------------------------------
// Learned tables

struct LearnedTable {
  Method method = Method::ql;
  AgentConfig agent;
  MdpConfig mdp;
  RewardScheme scheme;
  std::vector<double> env_probs;  // lookahead PMF for state-value tables
  std::optional<QTable> q;
  std::optional<ValueTable> v;

  Policy policy() const {
    if (q) {
      auto Q = std::make_shared<const QTable>(*q);
      return [Q](int s) { return greedy_q_action(s, *Q); };
    }
    if (!v) throw std::logic_error("LearnedTable: no table loaded");
    auto V = std::make_shared<const ValueTable>(*v);
    return [V, scheme = scheme, probs = env_probs, g = mdp.gamma](int s) {
      return mc_action(s, *V, scheme, probs, g);
    };
  }
};

inline json to_json(const AgentConfig& a) {
  return json{{"gamma", a.gamma},
              {"alpha", a.alpha},
              {"step_size", a.step_size == StepSize::harmonic ? "harmonic" : "constant"},
              {"epsilon", a.epsilon},
              {"nstep", a.n},
              {"first_visit", a.first_visit},
              {"expectation", a.expectation == Expectation::empirical ? "empirical" : "true_pmf"}};
}

inline json to_json(const RewardScheme& r) {
  return json{{"r_sh", r.r_sh}, {"r_sl", r.r_sl}, {"r_rh", r.r_rh}, {"r_rl", r.r_rl}, {"u_h", r.u_h}};
}

inline std::string serialize_table(const LearnedTable& t) {
  json j;
  j["method"] = std::string(to_string(t.method));
  j["config"] = to_json(t.agent);
  j["rewards"] = to_json(t.scheme);
  j["N"] = t.mdp.N;
  j["U"] = t.mdp.U;
  j["gamma"] = t.mdp.gamma;
  if (t.q) {
    j["kind"] = "q";
    json rows = json::array();
    for (int s = 1; s <= t.q->num_states(); ++s)
      rows.push_back(json::array({(*t.q)(s, Action::reject), (*t.q)(s, Action::serve)}));
    j["q"] = std::move(rows);
  } else if (t.v) {
    j["kind"] = "v";
    j["env_probs"] = t.env_probs;
    j["values"] = t.v->values();
  } else {
    throw std::logic_error("serialize_table: no table");
  }
  return std::string(kTableMagic) + "\n" + j.dump(1) + "\n";
}

inline LearnedTable parse_table(const std::string& text, const std::string& origin = "table") {
  const auto eol = text.find('\n');
  if (text.substr(0, eol) != kTableMagic)
    throw std::invalid_argument(origin + ": missing '" + kTableMagic + "' header");
  LearnedTable t;
  try {
    const json j = json::parse(text.substr(eol + 1));
    t.method = parse_method(j.at("method").get<std::string>());
    t.mdp = MdpConfig{j.at("N").get<int>(), j.at("U").get<int>(), j.at("gamma").get<double>()};
    t.mdp.validate();
    const json& c = j.at("config");
    t.agent.method = t.method;
    t.agent.gamma = c.at("gamma").get<double>();
    t.agent.alpha = c.at("alpha").get<double>();
    t.agent.step_size = c.at("step_size").get<std::string>() == "harmonic" ? StepSize::harmonic
                                                                           : StepSize::constant;
    t.agent.epsilon = c.at("epsilon").get<double>();
    t.agent.n = c.at("nstep").get<int>();
    t.agent.first_visit = c.at("first_visit").get<bool>();
    t.agent.expectation = c.at("expectation").get<std::string>() == "empirical"
                              ? Expectation::empirical
                              : Expectation::true_pmf;
    const json& r = j.at("rewards");
    t.scheme = RewardScheme{r.at("r_sh").get<double>(), r.at("r_sl").get<double>(),
                            r.at("r_rh").get<double>(), r.at("r_rl").get<double>(),
                            r.at("u_h").get<double>()};
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "q") {
      QTable Q(t.mdp);
      const json& rows = j.at("q");
      if (!rows.is_array() || static_cast<int>(rows.size()) != t.mdp.num_states())
        throw std::invalid_argument("q has wrong number of rows");
      for (int s = 1; s <= t.mdp.num_states(); ++s) {
        const json& row = rows[static_cast<std::size_t>(s - 1)];
        const double qr = row.at(0).get<double>();
        const double qs = row.at(1).get<double>();
        if (Q.is_terminal(s)) {
          if (qr != 0.0 || qs != 0.0)
            throw std::invalid_argument("terminal state " + std::to_string(s) +
                                        " has nonzero Q");
          continue;
        }
        Q.set(s, Action::reject, qr);
        Q.set(s, Action::serve, qs);
      }
      t.q = std::move(Q);
    } else if (kind == "v") {
      ValueTable V(t.mdp);
      const auto values = j.at("values").get<std::vector<double>>();
      if (static_cast<int>(values.size()) != t.mdp.num_states())
        throw std::invalid_argument("values has wrong length");
      for (int s = 1; s <= t.mdp.num_states(); ++s) V.set(s, values[static_cast<std::size_t>(s - 1)]);
      t.env_probs = j.at("env_probs").get<std::vector<double>>();
      if (static_cast<int>(t.env_probs.size()) != t.mdp.U)
        throw std::invalid_argument("env_probs has wrong length");
      t.v = std::move(V);
    } else {
      throw std::invalid_argument("unknown table kind '" + kind + "'");
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(origin + ": " + e.what());
  } catch (const std::logic_error& e) {
    throw std::invalid_argument(origin + ": " + e.what());
  }
  return t;
}

inline void save_table(const std::filesystem::path& path, const LearnedTable& t) {
  write_file(path, serialize_table(t));
}

inline LearnedTable load_table(const std::filesystem::path& path) {
  return parse_table(read_file(path), path.string());
}

// --------------------------------------------------------------------------
// Traces and sweep results

inline std::string trace_csv(const ConvergenceTrace& trace) {
  std::string out = "episode,max_delta\n";
  for (std::size_t i = 0; i < trace.max_delta.size(); ++i)
    out += std::to_string(i + 1) + "," + fmt(trace.max_delta[i], 9) + "\n";
  return out;
}

inline std::string sweep_csv(const SweepResult& result) {
  std::string out =
      "env,rho,policy,seed,episodes,mean_R,ci95_R,mean_T,train_episodes_to_converge\n";
  for (const auto& r : result.rows) {
    out += std::to_string(r.env) + "," + fmt(r.rho, 2) + "," + r.policy + "," +
           std::to_string(r.seed) + ",";
    if (r.failed) {
      out += "NA,NA,NA,NA,NA\n";
      continue;
    }
    out += std::to_string(r.report.episodes) + "," + fmt(r.report.mean_R) + "," +
           fmt(r.report.ci95_R) + "," + fmt(r.report.mean_T) + "," +
           (r.train_episodes_to_converge >= 0 ? std::to_string(r.train_episodes_to_converge)
                                              : std::string("NA")) +
           "\n";
  }
  return out;
}

inline json to_json(const SweepResult& result) {
  json rows = json::array();
  for (const auto& r : result.rows) {
    json row{{"env", r.env}, {"rho", r.rho}, {"policy", r.policy}, {"seed", r.seed}};
    if (r.failed) {
      row["failed"] = true;
      row["error"] = r.error;
    } else {
      row["episodes"] = r.report.episodes;
      row["mean_R"] = r.report.mean_R;
      row["ci95_R"] = r.report.ci95_R;
      row["mean_T"] = r.report.mean_T;
      row["train_episodes_to_converge"] =
          r.train_episodes_to_converge >= 0 ? json(r.train_episodes_to_converge) : json(nullptr);
    }
    rows.push_back(std::move(row));
  }
  return json{{"rows", std::move(rows)}};
}

/// Per-cell ratios followed by one `mean` row per policy (average over the
/// defined cells).
inline std::string ratio_csv(const std::vector<RatioRow>& rows, const std::string& baseline) {
  std::string out = "env,rho,policy,seed,baseline,ratio\n";
  std::vector<std::string> order;
  std::vector<std::pair<double, int>> acc;
  for (const auto& r : rows) {
    out += std::to_string(r.env) + "," + fmt(r.rho, 2) + "," + r.policy + "," +
           std::to_string(r.seed) + "," + baseline + "," + (r.ratio ? fmt(*r.ratio) : "NA") + "\n";
    auto it = std::find(order.begin(), order.end(), r.policy);
    if (it == order.end()) {
      order.push_back(r.policy);
      acc.emplace_back(0.0, 0);
      it = std::prev(order.end());
    }
    if (r.ratio) {
      auto& a = acc[static_cast<std::size_t>(it - order.begin())];
      a.first += *r.ratio;
      ++a.second;
    }
  }
  for (std::size_t i = 0; i < order.size(); ++i)
    out += "mean,NA," + order[i] + ",NA," + baseline + "," +
           (acc[i].second ? fmt(acc[i].first / acc[i].second) : "NA") + "\n";
  return out;
}

}  // namespace fogran::io
