#pragma once

// Tabular value estimates indexed by encoded state s in 1..U*(N+1).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fogran/mdp.hpp"

namespace fogran {

/// Running aggregate of the returns recorded for one state.
struct ReturnStats {
  std::size_t count = 0;
  double sum = 0.0;

  void add(double g) {
    ++count;
    sum += g;
  }
  double average() const { return count == 0 ? 0.0 : sum / static_cast<double>(count); }
};

class ValueTable {
 public:
  ValueTable() = default;
  ValueTable(int N, int U)
      : N_(N), U_(U),
        values_(static_cast<std::size_t>(U * (N + 1)), 0.0),
        returns_(values_.size()) {
    if (N < 1 || U < 1) throw std::invalid_argument("ValueTable: N and U must be positive");
  }
  explicit ValueTable(const MdpConfig& mdp) : ValueTable(mdp.N, mdp.U) {}

  int N() const { return N_; }
  int U() const { return U_; }
  int num_states() const { return static_cast<int>(values_.size()); }

  double operator()(int s) const { return values_.at(index(s)); }
  double at(int b, int u) const { return (*this)(encode_state(b, u, U_)); }

  void set(int s, double v) {
    if (s > U_ * N_) {
      if (v != 0.0) throw std::logic_error("ValueTable: terminal states must keep value 0");
      return;
    }
    values_.at(index(s)) = v;
  }

  /// Appends a return for `s` and resets V(s) to the average of all returns.
  void record_return(int s, double g) {
    if (s > U_ * N_) throw std::logic_error("ValueTable: returns recorded for a terminal state");
    auto& agg = returns_.at(index(s));
    agg.add(g);
    values_[index(s)] = agg.average();
  }

  const ReturnStats& returns(int s) const { return returns_.at(index(s)); }
  const std::vector<double>& values() const { return values_; }

  /// Sup-norm distance to a table of the same shape.
  double max_abs_diff(const ValueTable& other) const {
    if (other.values_.size() != values_.size())
      throw std::invalid_argument("ValueTable: shape mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i)
      d = std::max(d, std::abs(values_[i] - other.values_[i]));
    return d;
  }

 private:
  std::size_t index(int s) const {
    if (s < 1 || s > num_states()) throw std::out_of_range("ValueTable: state out of range");
    return static_cast<std::size_t>(s - 1);
  }

  int N_ = 0;
  int U_ = 0;
  std::vector<double> values_;
  std::vector<ReturnStats> returns_;
};

class QTable {
 public:
  QTable() = default;
  QTable(int N, int U)
      : N_(N), U_(U), q_(static_cast<std::size_t>(kNumActions * U * (N + 1)), 0.0) {
    if (N < 1 || U < 1) throw std::invalid_argument("QTable: N and U must be positive");
  }
  explicit QTable(const MdpConfig& mdp) : QTable(mdp.N, mdp.U) {}

  int N() const { return N_; }
  int U() const { return U_; }
  int num_states() const { return U_ * (N_ + 1); }
  std::size_t size() const { return q_.size(); }

  bool is_terminal(int s) const { return s > U_ * N_; }

  double operator()(int s, Action a) const { return q_.at(index(s, a)); }

  void set(int s, Action a, double v) {
    if (is_terminal(s)) throw std::logic_error("QTable: terminal entries are fixed at 0");
    q_.at(index(s, a)) = v;
  }

  const std::vector<double>& entries() const { return q_; }

  double max_abs_diff(const QTable& other) const {
    if (other.q_.size() != q_.size()) throw std::invalid_argument("QTable: shape mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < q_.size(); ++i) d = std::max(d, std::abs(q_[i] - other.q_[i]));
    return d;
  }

  friend bool operator==(const QTable& a, const QTable& b) {
    return a.N_ == b.N_ && a.U_ == b.U_ && a.q_ == b.q_;
  }

 private:
  std::size_t index(int s, Action a) const {
    if (s < 1 || s > num_states()) throw std::out_of_range("QTable: state out of range");
    return static_cast<std::size_t>(s - 1) * kNumActions + static_cast<std::size_t>(index_of(a));
  }

  int N_ = 0;
  int U_ = 0;
  std::vector<double> q_;
};

}  // namespace fogran
