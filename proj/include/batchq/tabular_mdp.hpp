#pragma once

#include <vector>

#include "batchq/mdp.hpp"

namespace batchq {

/// Small dense MDP, mainly for hand-built chains and brute-force checks.
/// costs[s][a] and rows[s][a][j]; state s offers actions 0..costs[s].size()-1.
class TabularMdp final : public DiscreteMdp {
 public:
  TabularMdp(std::vector<std::vector<double>> costs,
             std::vector<std::vector<std::vector<double>>> rows);

  std::size_t num_states() const override { return costs_.size(); }
  int max_action(std::size_t s) const override { return static_cast<int>(costs_[s].size()) - 1; }
  double cost(std::size_t s, int a) const override { return costs_[s][static_cast<std::size_t>(a)]; }
  double expected(std::size_t s, int a, std::span<const double> values) const override;
  std::vector<double> transition_row(std::size_t s, int a) const override {
    return rows_[s][static_cast<std::size_t>(a)];
  }
  std::size_t sample_next(std::size_t s, int a, double u) const override;

 private:
  std::vector<std::vector<double>> costs_;
  std::vector<std::vector<std::vector<double>>> rows_;
};

}  // namespace batchq
