#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace batchq {

/// Read-only view of a finite discrete-time average-cost MDP whose feasible
/// actions at state s are 0..max_action(s). Solvers and learners work against
/// this interface; implementations must be safe for concurrent const use.
class DiscreteMdp {
 public:
  virtual ~DiscreteMdp() = default;

  virtual std::size_t num_states() const = 0;
  virtual int max_action(std::size_t s) const = 0;

  /// One-step cost of (s, a).
  virtual double cost(std::size_t s, int a) const = 0;

  /// sum_j P(j | s, a) * values[j].
  virtual double expected(std::size_t s, int a, std::span<const double> values) const = 0;

  /// Dense row P(. | s, a).
  virtual std::vector<double> transition_row(std::size_t s, int a) const = 0;

  /// Next state by inverting the row's CDF at u in [0, 1).
  virtual std::size_t sample_next(std::size_t s, int a, double u) const = 0;

  bool feasible(std::size_t s, int a) const {
    return s < num_states() && a >= 0 && a <= max_action(s);
  }
};

}  // namespace batchq
