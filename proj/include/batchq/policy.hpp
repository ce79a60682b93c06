#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace batchq {

/// Stationary deterministic batching policy over states 0..s_max and S_o
/// (the last entry). actions[s] is the batch size to serve, 0 meaning wait.
struct Policy {
  int b_max = 0;
  std::vector<int> actions;

  std::size_t size() const { return actions.size(); }
  std::size_t overflow() const { return actions.size() - 1; }
  int s_max() const { return static_cast<int>(actions.size()) - 2; }

  /// Action for an untruncated queue length; lengths past s_max use S_o.
  int action_for_queue(long long queue) const {
    const auto s = queue > s_max() ? overflow() : static_cast<std::size_t>(queue);
    return actions[s];
  }

  bool operator==(const Policy&) const = default;
};

/// Throws Error(domain) unless every action lies in 0..min(s, b_max)
/// (0..b_max at S_o) and the policy covers at least 0..b_max plus S_o.
void validate_policy(const Policy& policy);

Policy make_work_conserving(int b_max, int s_max);
/// Wait until b requests are present, then serve exactly b. Error(domain) if b
/// is outside 1..b_max.
Policy make_static(int b, int b_max, int s_max);
/// Wait below `limit`, otherwise serve min(s, b_max). Error(domain) if limit < 1.
Policy make_control_limit(int limit, int b_max, int s_max);

/// The threshold l when the policy is exactly "wait below l, serve min(s, b_max)
/// from l on" (S_o read as queue length s_max).
std::optional<int> detect_control_limit(const Policy& policy);

// --- CSV ---------------------------------------------------------------------
// Policy table: header "s,action", one row per state, S_o written as s_max+1.
// Chart: header "rho,w1,w2,s,action", several policies stacked.
// Lines starting with '#' are comments.

std::string policy_to_csv(const Policy& policy);
Policy parse_policy_csv(const std::string& text, int b_max);
void save_policy(const std::string& path, const Policy& policy);
Policy load_policy(const std::string& path, int b_max);

struct ChartKey {
  double rho;
  double w1;
  double w2;
};

/// Rows (without header) for one chart slice.
std::string policy_chart_rows(const Policy& policy, const ChartKey& key);
/// Extracts the slice whose (rho, w1, w2) matches `key` within 1e-9.
Policy parse_policy_chart(const std::string& text, const ChartKey& key, int b_max);
Policy load_policy_chart(const std::string& path, const ChartKey& key, int b_max);

/// Fraction of states with equal actions; weighted by `mass` when given.
/// Error(domain) on length mismatch.
double policy_agreement(const Policy& a, const Policy& b, const std::vector<double>* mass = nullptr);

}  // namespace batchq
