#pragma once

// IoT environments: probability mass functions over utility levels 1..U.
// The catalog holds 19 environments whose share of high-utility requests
// rho = P(u > 5) runs from 0.05 to 0.95 in steps of 0.05. Each one is
// obtained from the reference environment E_7 by rescaling its low block
// (u <= 5) and high block (u > 5) to masses 1 - rho and rho.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "fogran/rng.hpp"

namespace fogran {

inline constexpr int kCatalogSize = 19;
inline constexpr int kCatalogLevels = 10;

class EnvironmentPMF {
 public:
  EnvironmentPMF() = default;

  /// `probs[i]` is P(u = i + 1). Throws on negative or non-finite entries and
  /// on totals more than 1e-6 away from one. Totals off by more than 1e-12
  /// are renormalized; closer ones are kept so saved PMFs reload exactly.
  explicit EnvironmentPMF(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.size() < 2)
      throw std::invalid_argument("EnvironmentPMF: need at least two utility levels");
    double total = 0.0;
    for (double p : probs_) {
      if (!std::isfinite(p) || p < 0.0)
        throw std::invalid_argument("EnvironmentPMF: probabilities must be finite and >= 0");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-6)
      throw std::invalid_argument("EnvironmentPMF: probabilities must sum to 1 (got " +
                                  std::to_string(total) + ")");
    if (std::abs(total - 1.0) > 1e-12)
      for (double& p : probs_) p /= total;
    cdf_.resize(probs_.size());
    std::partial_sum(probs_.begin(), probs_.end(), cdf_.begin());
    // Pin the tail to 1 from the last level with mass so rounding can never
    // select a trailing zero-mass level.
    std::size_t last = probs_.size() - 1;
    while (last > 0 && probs_[last] == 0.0) --last;
    std::fill(cdf_.begin() + static_cast<std::ptrdiff_t>(last), cdf_.end(), 1.0);
  }

  friend bool operator==(const EnvironmentPMF& a, const EnvironmentPMF& b) {
    return a.probs_ == b.probs_;
  }

  int levels() const { return static_cast<int>(probs_.size()); }
  const std::vector<double>& probs() const { return probs_; }

  /// P(u = level), level in 1..U.
  double prob(int level) const { return probs_.at(static_cast<std::size_t>(level - 1)); }

  /// Split point for rho; 5 for the ten-level catalog.
  int split() const { return levels() / 2; }

  double rho() const {
    double r = 0.0;
    for (int u = split() + 1; u <= levels(); ++u) r += prob(u);
    return r;
  }

  double mean() const {
    double m = 0.0;
    for (int u = 1; u <= levels(); ++u) m += u * prob(u);
    return m;
  }

  /// Inverse-CDF draw, one uniform per call.
  int sample(Rng& rng) const {
    const double x = uniform01(rng);
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), x);
    return static_cast<int>(it - cdf_.begin()) + 1;
  }

 private:
  std::vector<double> probs_;
  std::vector<double> cdf_;
};

inline int sample_utility(const EnvironmentPMF& env, Rng& rng) { return env.sample(rng); }

struct EnvStats {
  double rho = 0.0;
  double u_bar = 0.0;
};

inline EnvStats env_stats(const EnvironmentPMF& env) { return {env.rho(), env.mean()}; }

/// Reference columns of the environment catalog, rounded to three decimals.
struct ReferenceColumn {
  int index;
  std::array<double, kCatalogLevels> probs;
  double rho;
  double u_bar;
};

inline constexpr std::array<ReferenceColumn, 6> kReferenceColumns{{
    {1, {0.015, 0.073, 0.365, 0.292, 0.205, 0.014, 0.013, 0.011, 0.009, 0.003}, 0.05, 3.82},
    {4, {0.012, 0.062, 0.308, 0.246, 0.172, 0.057, 0.051, 0.046, 0.034, 0.012}, 0.20, 4.4},
    {7, {0.01, 0.05, 0.25, 0.2, 0.14, 0.1, 0.09, 0.08, 0.06, 0.02}, 0.35, 4.97},
    {10, {0.008, 0.038, 0.192, 0.154, 0.108, 0.142, 0.129, 0.114, 0.086, 0.029}, 0.50, 5.55},
    {15, {0.004, 0.019, 0.096, 0.077, 0.054, 0.214, 0.193, 0.171, 0.129, 0.043}, 0.75, 6.5},
    {19, {0.001, 0.004, 0.019, 0.015, 0.011, 0.271, 0.244, 0.217, 0.163, 0.055}, 0.95, 7.27},
}};

/// The reference environment E_7 every catalog entry is derived from.
inline const EnvironmentPMF& base_environment() {
  static const EnvironmentPMF e7{std::vector<double>(kReferenceColumns[2].probs.begin(),
                                                     kReferenceColumns[2].probs.end())};
  return e7;
}

/// Rescales the low block (u <= split) of `base` to mass 1 - rho and the high
/// block to mass rho, keeping within-block ratios.
inline EnvironmentPMF build_environment(double rho, const EnvironmentPMF& base) {
  if (!(rho >= 0.0 && rho <= 1.0))
    throw std::domain_error("build_environment: rho must lie in [0, 1]");
  const int split = base.split();
  double base_low = 0.0;
  for (int u = 1; u <= split; ++u) base_low += base.prob(u);
  const double base_high = base.rho();
  if ((rho < 1.0 && base_low <= 0.0) || (rho > 0.0 && base_high <= 0.0))
    throw std::domain_error("build_environment: base has no mass in a block that needs it");
  std::vector<double> out(base.probs());
  for (int u = 1; u <= base.levels(); ++u) {
    auto& p = out[static_cast<std::size_t>(u - 1)];
    if (u <= split)
      p = rho < 1.0 ? p * (1.0 - rho) / base_low : 0.0;
    else
      p = rho > 0.0 ? p * rho / base_high : 0.0;
  }
  return EnvironmentPMF(std::move(out));
}

inline double catalog_rho(int k) { return 0.05 * k; }

/// Environment E_k, k in 1..19.
inline EnvironmentPMF catalog(int k) {
  if (k < 1 || k > kCatalogSize)
    throw std::domain_error("catalog: environment index must be in 1..19");
  return build_environment(catalog_rho(k), base_environment());
}

inline EnvironmentPMF point_mass(int level, int U) {
  if (level < 1 || level > U) throw std::domain_error("point_mass: level outside [1, U]");
  std::vector<double> p(static_cast<std::size_t>(U), 0.0);
  p[static_cast<std::size_t>(level - 1)] = 1.0;
  return EnvironmentPMF(std::move(p));
}

inline EnvironmentPMF uniform_environment(int U) {
  return EnvironmentPMF(std::vector<double>(static_cast<std::size_t>(U), 1.0 / U));
}

}  // namespace fogran
