#pragma once

#include <memory>

#include "batchq/mdp.hpp"
#include "batchq/smdp.hpp"

namespace batchq {

/// Largest admissible eta (exclusive): the minimum of y(s,a) / (1 - m'(s|s,a))
/// over pairs with m'(s|s,a) < 1, evaluated via its closed forms
///   1/lambda,  tau(a) / (1 - p_a(a)),  tau(a) / sum_{i<=a} p_i(a).
double eta_bound(const FiniteSmdp& model);

/// Discrete-time MDP with the same optimal average cost as the SMDP:
///   c~(s,a) = c'(s,a) / y(s,a)
///   m~(j|s,a) = eta * m'(j|s,a) / y(s,a)                for j != s
///   m~(s|s,a) = 1 + eta * (m'(s|s,a) - 1) / y(s,a)
/// Rows are evaluated on demand from the shared SMDP tables.
class DtMdp final : public DiscreteMdp {
 public:
  DtMdp(std::shared_ptr<const FiniteSmdp> model, double eta);

  const FiniteSmdp& model() const { return *model_; }
  std::shared_ptr<const FiniteSmdp> shared_model() const { return model_; }
  double eta() const { return eta_; }

  std::size_t num_states() const override { return model_->num_states(); }
  int max_action(std::size_t s) const override { return model_->max_action(s); }
  double cost(std::size_t s, int a) const override { return model_->cost(s, a) / model_->sojourn(a); }
  double expected(std::size_t s, int a, std::span<const double> values) const override;
  std::vector<double> transition_row(std::size_t s, int a) const override;
  std::size_t sample_next(std::size_t s, int a, double u) const override;

  /// m~(s|s,a).
  double diagonal(std::size_t s, int a) const;

 private:
  std::shared_ptr<const FiniteSmdp> model_;
  double eta_;
};

/// eta = eta_fraction * eta_bound(model). Throws Error(config) unless
/// 0 < eta_fraction < 1, and Error(model_violation) if any diagonal leaves
/// [0, 1] by more than 1e-12.
DtMdp to_dtmdp(std::shared_ptr<const FiniteSmdp> model, double eta_fraction = 0.99);

}  // namespace batchq
