#include "batchq/smdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "batchq/error.hpp"

namespace batchq {

int StateSpace::max_action(std::size_t s) const {
  if (is_overflow(s)) return b_max;
  return std::min(static_cast<int>(s), b_max);
}

namespace {

void check_state(const StateSpace& space, std::size_t s) {
  if (!space.contains(s))
    throw Error(ErrorKind::domain, "state index " + std::to_string(s) + " outside 0.." +
                                       std::to_string(space.overflow()));
}

void check_action(const StateSpace& space, std::size_t s, int a) {
  check_state(space, s);
  if (a < 0 || a > space.max_action(s))
    throw Error(ErrorKind::domain, "action " + std::to_string(a) + " infeasible at state " +
                                       std::to_string(s) + " (valid 0.." +
                                       std::to_string(space.max_action(s)) + ")");
}

void check_truncation(const ServiceProfile& profile, const TruncationConfig& trunc) {
  if (trunc.s_max < profile.b_max())
    throw Error(ErrorKind::config, "truncation: s_max (" + std::to_string(trunc.s_max) +
                                       ") must be >= b_max (" +
                                       std::to_string(profile.b_max()) + ")");
  if (!(trunc.c_o >= 0.0) || !std::isfinite(trunc.c_o))
    throw Error(ErrorKind::config, "truncation: c_o must be >= 0");
}

// c(q, a) of the untruncated model at queue length q.
double holding_and_service_cost(int q, int a, const ServiceProfile& profile, double lambda,
                                const Weights& w) {
  if (a == 0) return w.w1 * q / (lambda * lambda);
  const double tau = profile.latency(a);
  return w.w2 * profile.energy(a) + w.w1 * (q / lambda * tau + 0.5 * tau * tau);
}

}  // namespace

std::vector<int> feasible_actions(const StateSpace& space, std::size_t s) {
  check_state(space, s);
  std::vector<int> out(static_cast<std::size_t>(space.max_action(s)) + 1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<int>(i);
  return out;
}

double stage_cost(std::size_t s, int a, const ServiceProfile& profile, const Workload& workload,
                  const Weights& weights, const TruncationConfig& trunc) {
  const StateSpace space{trunc.s_max, profile.b_max()};
  check_action(space, s, a);
  double c = holding_and_service_cost(space.queue_length(s), a, profile, workload.lambda, weights);
  if (space.is_overflow(s)) {
    const double y = a == 0 ? 1.0 / workload.lambda : profile.latency(a);
    c += trunc.c_o * y;
  }
  return c;
}

std::vector<double> transition_row(std::size_t s, int a, const ServiceProfile& profile,
                                   const Workload& workload, const TruncationConfig& trunc) {
  const StateSpace space{trunc.s_max, profile.b_max()};
  check_action(space, s, a);
  std::vector<double> row(space.size(), 0.0);
  if (a == 0) {
    row[static_cast<int>(s) < trunc.s_max ? s + 1 : space.overflow()] = 1.0;
    return row;
  }
  const int q = space.queue_length(s);
  const int k_last = trunc.s_max - q + a;
  const PoissonPmf pmf = poisson_pmf(workload.lambda * profile.latency(a), k_last);
  for (int k = 0; k <= k_last; ++k) row[static_cast<std::size_t>(q - a + k)] = pmf.p[k];
  row[space.overflow()] = pmf.tail;
  return row;
}

FiniteSmdp::FiniteSmdp(const ServiceProfile& profile, const Workload& workload,
                       const Weights& weights, const TruncationConfig& trunc)
    : profile_(profile),
      workload_(workload),
      weights_(weights),
      trunc_(trunc),
      space_{trunc.s_max, profile.b_max()} {}

FiniteSmdp FiniteSmdp::build(const ServiceProfile& profile, const Workload& workload,
                             const Weights& weights, const TruncationConfig& trunc) {
  const TrafficIntensity ti = traffic_intensity(profile, workload);
  if (!ti.stable)
    throw Error(ErrorKind::stability,
                "traffic intensity rho = " + std::to_string(ti.rho) + " is not below 1");
  check_truncation(profile, trunc);

  FiniteSmdp m(profile, workload, weights, trunc);
  const int b_max = profile.b_max();
  const std::size_t n = m.space_.size();
  const std::size_t width = static_cast<std::size_t>(trunc.s_max) + 1;

  m.sojourn_.resize(static_cast<std::size_t>(b_max) + 1);
  m.sojourn_[0] = 1.0 / workload.lambda;
  for (int a = 1; a <= b_max; ++a) m.sojourn_[a] = profile.latency(a);

  m.pmf_.resize(static_cast<std::size_t>(b_max) * width);
  m.cdf_.resize(m.pmf_.size());
  m.tail_.resize(m.pmf_.size());
  for (int a = 1; a <= b_max; ++a) {
    const std::size_t base = static_cast<std::size_t>(a - 1) * width;
    const PoissonPmf pmf = poisson_pmf(workload.lambda * profile.latency(a), trunc.s_max);
    double acc = 0.0;
    double tail = pmf.tail;
    for (std::size_t k = width; k-- > 0;) {
      m.tail_[base + k] = tail;
      tail += pmf.p[k];
    }
    for (std::size_t k = 0; k < width; ++k) {
      m.pmf_[base + k] = pmf.p[k];
      acc += pmf.p[k];
      m.cdf_[base + k] = acc;
    }
  }

  m.offset_.resize(n + 1);
  std::size_t pairs = 0;
  for (std::size_t s = 0; s < n; ++s) {
    m.offset_[s] = pairs;
    pairs += static_cast<std::size_t>(m.space_.max_action(s)) + 1;
  }
  m.offset_[n] = pairs;
  m.cost_.resize(pairs);
  for (std::size_t s = 0; s < n; ++s)
    for (int a = 0; a <= m.space_.max_action(s); ++a)
      m.cost_[m.offset_[s] + static_cast<std::size_t>(a)] =
          stage_cost(s, a, profile, workload, weights, trunc);
  return m;
}

std::span<const double> FiniteSmdp::pmf(int a) const {
  const std::size_t width = static_cast<std::size_t>(trunc_.s_max) + 1;
  return std::span<const double>(pmf_).subspan(static_cast<std::size_t>(a - 1) * width, width);
}

std::span<const double> FiniteSmdp::tail(int a) const {
  const std::size_t width = static_cast<std::size_t>(trunc_.s_max) + 1;
  return std::span<const double>(tail_).subspan(static_cast<std::size_t>(a - 1) * width, width);
}

double FiniteSmdp::arrivals(int a, int k) const {
  if (a < 1 || a > profile_.b_max() || k < 0 || k > trunc_.s_max)
    throw Error(ErrorKind::domain, "arrivals: (a, k) out of range");
  return pmf(a)[static_cast<std::size_t>(k)];
}

double FiniteSmdp::overflow_mass(std::size_t s, int a) const {
  if (a == 0) return static_cast<int>(s) >= trunc_.s_max ? 1.0 : 0.0;
  const int k_last = trunc_.s_max - space_.queue_length(s) + a;
  return tail(a)[static_cast<std::size_t>(k_last)];
}

double FiniteSmdp::prob(std::size_t s, int a, std::size_t j) const {
  if (j == space_.overflow()) return overflow_mass(s, a);
  if (a == 0) return (static_cast<int>(s) < trunc_.s_max && j == s + 1) ? 1.0 : 0.0;
  const int k = static_cast<int>(j) - space_.queue_length(s) + a;
  return k < 0 ? 0.0 : pmf(a)[static_cast<std::size_t>(k)];
}

double FiniteSmdp::expected(std::size_t s, int a, std::span<const double> values) const {
  if (a == 0) return values[static_cast<int>(s) < trunc_.s_max ? s + 1 : space_.overflow()];
  const int q = space_.queue_length(s);
  const std::size_t first = static_cast<std::size_t>(q - a);
  const std::size_t count = static_cast<std::size_t>(trunc_.s_max - q + a) + 1;
  const double* p = pmf(a).data();
  const double* v = values.data() + first;
  double acc = 0.0;
  for (std::size_t k = 0; k < count; ++k) acc += p[k] * v[k];
  return acc + tail(a)[count - 1] * values[space_.overflow()];
}

std::vector<double> FiniteSmdp::transition_row(std::size_t s, int a) const {
  check_action(space_, s, a);
  std::vector<double> row(space_.size(), 0.0);
  for (std::size_t j = 0; j < row.size(); ++j) row[j] = prob(s, a, j);
  return row;
}

std::size_t FiniteSmdp::sample_next(std::size_t s, int a, double u) const {
  if (a == 0) return static_cast<int>(s) < trunc_.s_max ? s + 1 : space_.overflow();
  const int q = space_.queue_length(s);
  const std::size_t count = static_cast<std::size_t>(trunc_.s_max - q + a) + 1;
  const std::size_t width = static_cast<std::size_t>(trunc_.s_max) + 1;
  const auto first = cdf_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(a - 1) * width);
  const auto last = first + static_cast<std::ptrdiff_t>(count);
  const auto it = std::upper_bound(first, last, u);
  if (it == last) return space_.overflow();
  return static_cast<std::size_t>(q - a) + static_cast<std::size_t>(it - first);
}

}  // namespace batchq
