#pragma once

// Latency/energy model of one (accelerator, inference model) pair and the
// arrival process feeding it.
//
// Units are fixed throughout the library: time in ms, energy in mJ, rates in
// requests/ms, power in mJ/ms (= W).

#include <span>
#include <string>
#include <vector>

namespace batchq {

/// Linear batch service model: tau(b) = alpha*b + tau0, zeta(b) = beta*b + zeta0.
class ServiceProfile {
 public:
  /// Throws Error(config) unless alpha, beta > 0, tau0, zeta0 >= 0, b_max >= 1.
  ServiceProfile(double alpha, double tau0, double beta, double zeta0, int b_max);

  double alpha() const { return alpha_; }
  double tau0() const { return tau0_; }
  double beta() const { return beta_; }
  double zeta0() const { return zeta0_; }
  int b_max() const { return b_max_; }

  // Unchecked closed forms; valid for any b >= 1.
  double latency(int b) const { return alpha_ * b + tau0_; }
  double energy(int b) const { return beta_ * b + zeta0_; }
  double throughput(int b) const { return b / latency(b); }

  /// mu at b_max, the largest sustainable arrival rate.
  double max_throughput() const { return throughput(b_max_); }

 private:
  double alpha_;
  double tau0_;
  double beta_;
  double zeta0_;
  int b_max_;
};

struct Workload {
  double lambda;  // requests/ms

  /// Throws Error(config) unless lambda > 0 and finite.
  static Workload make(double lambda);
  /// lambda = rho * mu(b_max).
  static Workload from_rho(const ServiceProfile& profile, double rho);
};

struct Weights {
  double w1 = 1.0;  // latency
  double w2 = 0.0;  // energy

  /// Throws Error(config) unless w1, w2 >= 0 and w1 + w2 > 0.
  static Weights make(double w1, double w2);
};

struct BatchMetrics {
  double latency;            // ms
  double energy;             // mJ
  double throughput;         // requests/ms
  double energy_efficiency;  // requests/mJ
};

/// Throws Error(domain) when b is outside 1..b_max.
BatchMetrics profile_metrics(const ServiceProfile& profile, int b);

struct TrafficIntensity {
  double rho;
  bool stable;
};

TrafficIntensity traffic_intensity(const ServiceProfile& profile, const Workload& workload);

// --- fitting ---------------------------------------------------------------

struct Sample {
  double batch;
  double value;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rmse = 0.0;
  bool intercept_clamped = false;
};

/// Ordinary least squares y = slope*x + intercept. Throws Error(fit) for
/// fewer than two samples or a single distinct x.
LinearFit fit_line(std::span<const Sample> samples);

struct ProfileFit {
  ServiceProfile profile;
  LinearFit latency;
  LinearFit energy;
  std::vector<std::string> warnings;
};

/// Fits both series and assembles a profile. Negative intercepts are clamped
/// to zero (with a warning); a negative slope is Error(model_violation).
ProfileFit fit_linear_profile(std::span<const Sample> latency_samples,
                              std::span<const Sample> energy_samples, int b_max);

// --- arrivals --------------------------------------------------------------

struct PoissonPmf {
  std::vector<double> p;  // p[0..k_max]
  double tail = 0.0;      // P(K > k_max)
};

/// Poisson(mean) probabilities 0..k_max plus the upper tail. Stable for
/// large means (mode-anchored log-space start when exp(-mean) underflows).
PoissonPmf poisson_pmf(double mean, int k_max);

/// Number of arrivals during `duration` ms: Poisson(lambda * duration).
PoissonPmf arrival_count_pmf(const Workload& workload, double duration, int k_max);

// --- files -----------------------------------------------------------------

/// Parses {"alpha","tau0","beta","zeta0","b_max","units":{"time":"ms","energy":"mJ"}}.
/// Missing or different units are rejected with Error(io).
ServiceProfile parse_profile_json(const std::string& text);
ServiceProfile load_profile(const std::string& path);
std::string profile_to_json(const ServiceProfile& profile);

}  // namespace batchq
