#pragma once

#include <cstdint>
#include <vector>

#include "batchq/policy.hpp"
#include "batchq/profile.hpp"

namespace batchq {

struct SimOptions {
  double horizon = 1e6;           // ms
  std::uint64_t seed = 1;
  double warmup_fraction = 0.05;  // leading share of the horizon left out of averages
  long long max_queue = 1'000'000;
};

/// Averages cover the window [warmup, horizon]; counts cover the whole run.
struct SimReport {
  double avg_queue_len = 0.0;      // time-average requests in system
  double avg_response_time = 0.0;  // ms, arrival to batch completion
  double avg_power = 0.0;          // mJ/ms
  double energy_per_task = 0.0;    // mJ
  double throughput = 0.0;         // requests/ms
  double arrival_rate = 0.0;       // empirical, requests/ms
  std::vector<long long> batch_histogram;  // index = batch size
  long long n_arrivals = 0;
  long long n_served = 0;
  long long queue_at_horizon = 0;  // waiting, not in service
  long long in_service_at_horizon = 0;
  double horizon = 0.0;
  double window = 0.0;
  std::uint64_t seed = 0;
};

/// Continuous-time event simulation of the batch queue under `policy`.
/// Queue lengths beyond s_max use the S_o action. Throws Error(instability)
/// when the number in system exceeds options.max_queue and Error(domain) for an
/// infeasible policy or a non-positive horizon.
SimReport simulate(const ServiceProfile& profile, const Workload& workload, const Policy& policy,
                   const SimOptions& options);

/// (w1 / lambda) * avg_queue_len + w2 * avg_power.
double weighted_cost_of(const SimReport& report, const Weights& weights, const Workload& workload);

struct ReplicationSummary {
  double mean_cost = 0.0;
  double stderr_cost = 0.0;  // 0 for a single replication
  std::vector<SimReport> reports;
};

/// `replications` runs with seeds seed, seed+1, ...; executed on up to `jobs`
/// threads and reduced in seed order.
ReplicationSummary replicate(const ServiceProfile& profile, const Workload& workload,
                             const Policy& policy, const Weights& weights,
                             const SimOptions& options, int replications, unsigned jobs = 1);

}  // namespace batchq
