#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "batchq/error.hpp"
#include "batchq/mdp.hpp"
#include "batchq/policy.hpp"
#include "batchq/smdp.hpp"

namespace batchq {

// --- relative value iteration ------------------------------------------------

struct SolveOptions {
  double epsilon = 0.01;       // span tolerance on J_{n+1} - J_n
  long long iter_max = 10000;
  std::size_t ref_state = 0;   // s*, whose value is subtracted each sweep
};

struct SolveReport {
  double g = 0.0;              // J_n(s*) at termination
  std::vector<double> h;       // J_n - J_n(s*), so h(s*) = 0
  long long iterations = 0;
  double final_span = 0.0;
  bool converged = false;
  /// sum_s |A_s| * |S|, the multiplications in one sweep.
  double multiplications_per_iteration = 0.0;
};

struct SolveResult {
  Policy policy;
  SolveReport report;
};

/// J_{n+1}(s) = min_a { c(s,a) - J_n(s*) + sum_j P(j|s,a) J_n(j) } from J_0 = 0,
/// stopping when span(J_{n+1} - J_n) < epsilon or after iter_max sweeps (then
/// converged = false). The policy is the argmin against the final J, ties
/// going to the smallest action.
SolveResult relative_value_iteration(const DiscreteMdp& mdp, const SolveOptions& options = {});

/// r(s) = min_a { c(s,a) - g + sum_j P(j|s,a) h(j) } - h(s).
std::vector<double> optimality_residual(const DiscreteMdp& mdp, double g, std::span<const double> h);

double span(std::span<const double> v);

// --- policy evaluation -----------------------------------------------------

/// Dense row-major transition matrix of a Markov chain.
struct ChainMatrix {
  std::size_t n = 0;
  std::vector<double> p;

  double operator()(std::size_t i, std::size_t j) const { return p[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return p[i * n + j]; }
};

ChainMatrix policy_chain(const FiniteSmdp& model, const Policy& policy);

/// Solves mu P = mu, sum mu = 1 on the chain's single closed class (transient
/// states get 0). Small chains use GTH elimination, which keeps full relative
/// accuracy on tiny probabilities; large ones use power iteration on the lazy
/// chain (P + I)/2 to 1e-12. Throws Error(structure) when there is more than
/// one closed class.
std::vector<double> stationary_distribution(const ChainMatrix& chain);
std::vector<double> stationary_distribution(const Policy& policy, const FiniteSmdp& model);

struct EvalReport {
  std::vector<double> mu;
  double g_pi = 0.0;       // sum mu c' / sum mu y
  double delta_pi = 0.0;   // mu(S_o) c'(S_o) / sum mu y
  bool acceptable = false; // delta_pi < delta
  double mean_sojourn = 0.0;      // sum mu y, ms per epoch
  double avg_queue_len = 0.0;     // time-average requests in system
  double avg_response_time = 0.0; // avg_queue_len / lambda (Little)
  double avg_power = 0.0;         // mJ/ms
  double energy_efficiency = 0.0; // lambda / avg_power, requests/mJ
};

/// Throws Error(domain) for an infeasible or mis-sized policy; propagates
/// stationary_distribution errors.
EvalReport evaluate_policy(const Policy& policy, const FiniteSmdp& model, double delta);

// --- truncation search -------------------------------------------------------

struct SmaxSearchOptions {
  double c_o = 100.0;
  double delta = 0.001;
  SolveOptions solve{};
  double eta_fraction = 0.99;
  std::vector<int> grid;      // ascending, all >= b_max
  bool stop_at_first = true;  // false records every grid point
  unsigned jobs = 1;
};

struct SmaxRecord {
  int s_max = 0;
  double g_pi = 0.0;
  double delta_pi = 0.0;
  long long iterations = 0;
  bool converged = false;
  double space_complexity = 0.0;  // b_max * s_max
  double time_complexity = 0.0;   // iterations * b_max * s_max^2
  bool acceptable = false;
  std::optional<int> control_limit;
};

struct SmaxSearchResult {
  int s_max = 0;
  std::vector<SmaxRecord> records;
};

class SearchExhausted : public Error {
 public:
  explicit SearchExhausted(std::vector<SmaxRecord> records)
      : Error(ErrorKind::exhausted, "no grid point met the truncation tolerance"),
        records_(std::move(records)) {}
  const std::vector<SmaxRecord>& records() const { return records_; }

 private:
  std::vector<SmaxRecord> records_;
};

/// Builds, discretizes, solves and evaluates the model per grid point and
/// returns the smallest acceptable s_max. Throws SearchExhausted otherwise.
SmaxSearchResult find_min_smax(const ServiceProfile& profile, const Workload& workload,
                               const Weights& weights, const SmaxSearchOptions& options);

/// One grid point of find_min_smax.
SmaxRecord evaluate_truncation(const ServiceProfile& profile, const Workload& workload,
                               const Weights& weights, int s_max, const SmaxSearchOptions& options);

}  // namespace batchq
