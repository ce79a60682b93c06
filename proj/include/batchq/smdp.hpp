#pragma once

// Batch-service SMDP embedded at decision epochs, truncated to states
// 0..s_max plus an aggregated overflow state S_o (index s_max + 1).

#include <cstddef>
#include <span>
#include <vector>

#include "batchq/profile.hpp"

namespace batchq {

struct TruncationConfig {
  int s_max = 0;
  double c_o = 0.0;  // overflow cost per ms spent at S_o
};

/// Index layout of the truncated state space.
struct StateSpace {
  int s_max;
  int b_max;

  std::size_t size() const { return static_cast<std::size_t>(s_max) + 2; }
  std::size_t overflow() const { return static_cast<std::size_t>(s_max) + 1; }
  bool is_overflow(std::size_t s) const { return s == overflow(); }
  /// Requests in system; S_o counts as s_max.
  int queue_length(std::size_t s) const {
    return is_overflow(s) ? s_max : static_cast<int>(s);
  }
  /// Largest feasible batch: min(s, b_max), and b_max at S_o.
  int max_action(std::size_t s) const;
  bool contains(std::size_t s) const { return s < size(); }
};

/// Feasible batch sizes {0, ..., max_action(s)}. Throws Error(domain) for an
/// index outside the space.
std::vector<int> feasible_actions(const StateSpace& space, std::size_t s);

/// Expected cost until the next epoch, c'(s, a), including the overflow term
/// c_o * y(S_o, a). Throws Error(domain) for an infeasible action.
double stage_cost(std::size_t s, int a, const ServiceProfile& profile, const Workload& workload,
                  const Weights& weights, const TruncationConfig& trunc);

/// Dense m'(. | s, a) computed from scratch.
std::vector<double> transition_row(std::size_t s, int a, const ServiceProfile& profile,
                                   const Workload& workload, const TruncationConfig& trunc);

/// Materialized truncated model. Transitions for a >= 1 are held as one
/// Poisson vector (with cumulative and tail sums) per batch size, so storage
/// is O(b_max * s_max). Immutable once built.
class FiniteSmdp {
 public:
  /// Throws Error(stability) when rho >= 1 and Error(config) when s_max < b_max
  /// or c_o < 0.
  static FiniteSmdp build(const ServiceProfile& profile, const Workload& workload,
                          const Weights& weights, const TruncationConfig& trunc);

  const ServiceProfile& profile() const { return profile_; }
  const Workload& workload() const { return workload_; }
  const Weights& weights() const { return weights_; }
  const TruncationConfig& truncation() const { return trunc_; }
  const StateSpace& space() const { return space_; }

  std::size_t num_states() const { return space_.size(); }
  std::size_t overflow() const { return space_.overflow(); }
  int max_action(std::size_t s) const { return space_.max_action(s); }

  /// Expected sojourn y(s, a): 1/lambda for a = 0, tau(a) otherwise.
  double sojourn(int a) const { return sojourn_[static_cast<std::size_t>(a)]; }
  double cost(std::size_t s, int a) const { return cost_[offset_[s] + static_cast<std::size_t>(a)]; }

  /// Probability of k arrivals during one batch of size a (a >= 1), 0 <= k <= s_max.
  double arrivals(int a, int k) const;
  /// m'(S_o | s, a).
  double overflow_mass(std::size_t s, int a) const;
  /// m'(j | s, a).
  double prob(std::size_t s, int a, std::size_t j) const;

  /// sum_j m'(j | s, a) * values[j].
  double expected(std::size_t s, int a, std::span<const double> values) const;
  std::vector<double> transition_row(std::size_t s, int a) const;
  std::size_t sample_next(std::size_t s, int a, double u) const;

  /// Number of stored (s, a) pairs.
  std::size_t num_pairs() const { return cost_.size(); }

 private:
  FiniteSmdp(const ServiceProfile& profile, const Workload& workload, const Weights& weights,
             const TruncationConfig& trunc);

  std::span<const double> pmf(int a) const;
  std::span<const double> tail(int a) const;

  ServiceProfile profile_;
  Workload workload_;
  Weights weights_;
  TruncationConfig trunc_;
  StateSpace space_;

  std::vector<double> sojourn_;       // per action
  std::vector<std::size_t> offset_;   // first (s, 0) slot of state s
  std::vector<double> cost_;          // c'(s, a)
  // Row a-1 of each table holds batch size a; entries k = 0..s_max.
  std::vector<double> pmf_;           // p_k
  std::vector<double> cdf_;           // sum_{i<=k} p_i
  std::vector<double> tail_;          // sum_{i>k} p_i, summed from the far end
};

inline FiniteSmdp build_truncated(const ServiceProfile& profile, const Workload& workload,
                                  const Weights& weights, const TruncationConfig& trunc) {
  return FiniteSmdp::build(profile, workload, weights, trunc);
}

}  // namespace batchq
