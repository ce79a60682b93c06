#include "batchq/tabular_mdp.hpp"

#include <cmath>

#include "batchq/error.hpp"

namespace batchq {

TabularMdp::TabularMdp(std::vector<std::vector<double>> costs,
                       std::vector<std::vector<std::vector<double>>> rows)
    : costs_(std::move(costs)), rows_(std::move(rows)) {
  const std::size_t n = costs_.size();
  if (n == 0 || rows_.size() != n) throw Error(ErrorKind::config, "tabular mdp: shape mismatch");
  for (std::size_t s = 0; s < n; ++s) {
    if (costs_[s].empty() || rows_[s].size() != costs_[s].size())
      throw Error(ErrorKind::config, "tabular mdp: state needs at least one action");
    for (const auto& row : rows_[s]) {
      if (row.size() != n) throw Error(ErrorKind::config, "tabular mdp: row length mismatch");
      double total = 0.0;
      for (double p : row) {
        if (p < 0.0 || p > 1.0) throw Error(ErrorKind::config, "tabular mdp: entry outside [0, 1]");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-10)
        throw Error(ErrorKind::config, "tabular mdp: row does not sum to 1");
    }
  }
}

double TabularMdp::expected(std::size_t s, int a, std::span<const double> values) const {
  const auto& row = rows_[s][static_cast<std::size_t>(a)];
  double acc = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * values[j];
  return acc;
}

std::size_t TabularMdp::sample_next(std::size_t s, int a, double u) const {
  const auto& row = rows_[s][static_cast<std::size_t>(a)];
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] <= 0.0) continue;
    acc += row[j];
    last_positive = j;
    if (u < acc) return j;
  }
  return last_positive;
}

}  // namespace batchq
