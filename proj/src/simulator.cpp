#include "batchq/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <string>

#include "batchq/error.hpp"
#include "batchq/parallel.hpp"

namespace batchq {

namespace {

// Length of [a, b] inside [lo, hi].
double overlap(double a, double b, double lo, double hi) {
  return std::max(0.0, std::min(b, hi) - std::max(a, lo));
}

}  // namespace

SimReport simulate(const ServiceProfile& profile, const Workload& workload, const Policy& policy,
                   const SimOptions& options) {
  if (!(options.horizon > 0.0)) throw Error(ErrorKind::domain, "simulate: horizon must be > 0");
  if (!(options.warmup_fraction >= 0.0 && options.warmup_fraction < 1.0))
    throw Error(ErrorKind::domain, "simulate: warmup_fraction must lie in [0, 1)");
  if (policy.b_max != profile.b_max())
    throw Error(ErrorKind::domain, "simulate: policy b_max does not match the profile");
  validate_policy(policy);

  const double horizon = options.horizon;
  const double warmup = options.warmup_fraction * horizon;
  const double lambda = workload.lambda;

  std::mt19937_64 rng(options.seed);
  std::exponential_distribution<double> gap(lambda);

  SimReport r;
  r.horizon = horizon;
  r.window = horizon - warmup;
  r.seed = options.seed;
  r.batch_histogram.assign(static_cast<std::size_t>(profile.b_max()) + 1, 0);

  std::deque<double> waiting;       // arrival times, FIFO
  std::vector<double> in_service;   // arrival times of the current batch
  double now = 0.0;
  double next_arrival = gap(rng);
  double busy_until = std::numeric_limits<double>::infinity();
  bool busy = false;

  double area = 0.0, energy = 0.0, response_sum = 0.0;
  long long window_arrivals = 0, window_served = 0;

  const auto advance = [&](double to) {
    const double n = static_cast<double>(waiting.size() + in_service.size());
    area += n * overlap(now, to, warmup, horizon);
    now = to;
  };

  while (true) {
    if (!busy) {
      // Decision epoch: the server is idle.
      const auto queued = static_cast<long long>(waiting.size());
      const int a = queued > 0 ? policy.action_for_queue(queued) : 0;
      if (a > 0) {
        for (int i = 0; i < a; ++i) {
          in_service.push_back(waiting.front());
          waiting.pop_front();
        }
        busy = true;
        busy_until = now + profile.latency(a);
        continue;
      }
    }
    const double next = std::min(next_arrival, busy ? busy_until : next_arrival);
    if (next > horizon) {
      advance(horizon);
      break;
    }
    advance(next);
    if (busy && busy_until <= next_arrival) {
      const int a = static_cast<int>(in_service.size());
      r.n_served += a;
      if (now >= warmup) {
        window_served += a;
        ++r.batch_histogram[static_cast<std::size_t>(a)];
        energy += profile.energy(a);
        for (double t : in_service) response_sum += now - t;
      }
      in_service.clear();
      busy = false;
      busy_until = std::numeric_limits<double>::infinity();
    } else {
      waiting.push_back(now);
      ++r.n_arrivals;
      if (now >= warmup) ++window_arrivals;
      next_arrival = now + gap(rng);
      const auto in_system = static_cast<long long>(waiting.size() + in_service.size());
      if (in_system > options.max_queue)
        throw Error(ErrorKind::instability,
                    "simulated queue exceeded " + std::to_string(options.max_queue) + " requests at t = " +
                        std::to_string(now) + " ms (" + std::to_string(r.n_served) + " of " +
                        std::to_string(r.n_arrivals) + " served)");
    }
  }

  r.queue_at_horizon = static_cast<long long>(waiting.size());
  r.in_service_at_horizon = static_cast<long long>(in_service.size());
  r.avg_queue_len = area / r.window;
  r.avg_power = energy / r.window;
  r.throughput = static_cast<double>(window_served) / r.window;
  r.arrival_rate = static_cast<double>(window_arrivals) / r.window;
  if (window_served > 0) {
    r.avg_response_time = response_sum / static_cast<double>(window_served);
    r.energy_per_task = energy / static_cast<double>(window_served);
  }
  return r;
}

double weighted_cost_of(const SimReport& report, const Weights& weights, const Workload& workload) {
  return weights.w1 / workload.lambda * report.avg_queue_len + weights.w2 * report.avg_power;
}

ReplicationSummary replicate(const ServiceProfile& profile, const Workload& workload,
                             const Policy& policy, const Weights& weights,
                             const SimOptions& options, int replications, unsigned jobs) {
  if (replications < 1) throw Error(ErrorKind::config, "replications must be >= 1");
  ReplicationSummary out;
  out.reports.resize(static_cast<std::size_t>(replications));
  parallel_for(out.reports.size(), jobs, [&](std::size_t i) {
    SimOptions o = options;
    o.seed = options.seed + i;
    out.reports[i] = simulate(profile, workload, policy, o);
  });
  double sum = 0.0, sq = 0.0;
  for (const auto& r : out.reports) sum += weighted_cost_of(r, weights, workload);
  const double n = static_cast<double>(replications);
  out.mean_cost = sum / n;
  if (replications > 1) {
    for (const auto& r : out.reports) {
      const double d = weighted_cost_of(r, weights, workload) - out.mean_cost;
      sq += d * d;
    }
    out.stderr_cost = std::sqrt(sq / (n - 1.0) / n);
  }
  return out;
}

}  // namespace batchq
