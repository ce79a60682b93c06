#pragma once

// Tabular RVI Q-learning on a sampled discrete-time MDP. Costs enter as
// rewards -c(s,a) so the update is written in max form.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "batchq/mdp.hpp"
#include "batchq/policy.hpp"

namespace batchq {

using Rng = std::mt19937_64;

/// Q values for feasible pairs only; the bias term is Q(0, 0).
class QTable {
 public:
  explicit QTable(const DiscreteMdp& mdp);

  std::size_t num_states() const { return offset_.size() - 1; }
  int max_action(std::size_t s) const { return static_cast<int>(offset_[s + 1] - offset_[s]) - 1; }

  double& at(std::size_t s, int a) { return q_[offset_[s] + static_cast<std::size_t>(a)]; }
  double at(std::size_t s, int a) const { return q_[offset_[s] + static_cast<std::size_t>(a)]; }
  double reference() const { return q_[0]; }
  std::size_t index(std::size_t s, int a) const { return offset_[s] + static_cast<std::size_t>(a); }

  /// argmax_a Q(s, a), ties to the smallest action.
  int greedy(std::size_t s) const;
  double max_value(std::size_t s) const;
  Policy greedy_policy() const;

  const std::vector<double>& values() const { return q_; }

 private:
  std::vector<std::size_t> offset_;
  std::vector<double> q_;
};

struct QLearnConfig {
  double epsilon0 = 0.1;
  std::uint64_t iterations = 1'000'000;
  std::uint64_t seed = 1;
  std::uint64_t snapshot_every = 0;       // 0 disables periodic snapshots
  std::vector<std::uint64_t> snapshot_at; // extra snapshot steps
};

struct Transition {
  std::size_t next;
  double reward;  // -c(s, a)
};

/// Throws Error(domain) for an infeasible pair.
Transition sample_transition(const DiscreteMdp& env, std::size_t s, int a, Rng& rng);

/// Q(s,a) += lr * (reward + max_b Q(next, b) - Q(0,0) - Q(s,a)).
void q_update(QTable& q, std::size_t s, int a, std::size_t next, double reward, double learning_rate);

struct Snapshot {
  std::uint64_t iteration;
  Policy policy;
};

struct StepInfo {
  std::uint64_t step;  // 1-based
  std::size_t state;
  int action;
  bool explored;
};

struct QLearnResult {
  Policy policy;
  QTable q;
  std::vector<Snapshot> snapshots;
  std::uint64_t explorations = 0;
};

/// One trajectory from a uniformly drawn start state. At step n an action is
/// drawn uniformly from the feasible set with probability epsilon0 / sqrt(n),
/// otherwise the greedy one; the learning rate is 1 / sqrt(n + 2).
/// Deterministic for a given seed.
QLearnResult train(const DiscreteMdp& env, const QLearnConfig& config,
                   const std::function<void(const StepInfo&)>& observer = {});

}  // namespace batchq
