#include "batchq/profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "batchq/error.hpp"

namespace batchq {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain error";
    case ErrorKind::config: return "config error";
    case ErrorKind::stability: return "stability error";
    case ErrorKind::fit: return "fit error";
    case ErrorKind::model_violation: return "model violation";
    case ErrorKind::structure: return "structural error";
    case ErrorKind::exhausted: return "search exhausted";
    case ErrorKind::io: return "io error";
    case ErrorKind::instability: return "unstable run";
  }
  return "error";
}

namespace {

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }
bool finite_pos(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

ServiceProfile::ServiceProfile(double alpha, double tau0, double beta, double zeta0, int b_max)
    : alpha_(alpha), tau0_(tau0), beta_(beta), zeta0_(zeta0), b_max_(b_max) {
  if (!finite_pos(alpha) || !finite_pos(beta))
    throw Error(ErrorKind::config, "profile: alpha and beta must be > 0");
  if (!finite_nonneg(tau0) || !finite_nonneg(zeta0))
    throw Error(ErrorKind::config, "profile: tau0 and zeta0 must be >= 0");
  if (b_max < 1) throw Error(ErrorKind::config, "profile: b_max must be >= 1");
}

Workload Workload::make(double lambda) {
  if (!finite_pos(lambda)) throw Error(ErrorKind::config, "workload: lambda must be > 0");
  return Workload{lambda};
}

Workload Workload::from_rho(const ServiceProfile& profile, double rho) {
  if (!finite_pos(rho)) throw Error(ErrorKind::config, "workload: rho must be > 0");
  return make(rho * profile.max_throughput());
}

Weights Weights::make(double w1, double w2) {
  if (!finite_nonneg(w1) || !finite_nonneg(w2))
    throw Error(ErrorKind::config, "weights: w1 and w2 must be >= 0");
  if (w1 + w2 <= 0.0) throw Error(ErrorKind::config, "weights: w1 + w2 must be > 0");
  return Weights{w1, w2};
}

BatchMetrics profile_metrics(const ServiceProfile& profile, int b) {
  if (b < 1 || b > profile.b_max())
    throw Error(ErrorKind::domain, "batch size " + std::to_string(b) + " outside valid range 1.." +
                                       std::to_string(profile.b_max()));
  const double latency = profile.latency(b);
  const double energy = profile.energy(b);
  return BatchMetrics{latency, energy, b / latency, b / energy};
}

TrafficIntensity traffic_intensity(const ServiceProfile& profile, const Workload& workload) {
  const int b = profile.b_max();
  const double rho = workload.lambda * profile.latency(b) / b;
  return TrafficIntensity{rho, rho < 1.0};
}

LinearFit fit_line(std::span<const Sample> samples) {
  if (samples.size() < 2) throw Error(ErrorKind::fit, "fit: need at least two samples");
  const double n = static_cast<double>(samples.size());
  double mx = 0.0, my = 0.0;
  for (const auto& s : samples) {
    if (!(s.batch >= 1.0) || !finite_nonneg(s.value))
      throw Error(ErrorKind::fit, "fit: samples need batch >= 1 and value >= 0");
    mx += s.batch;
    my += s.value;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& s : samples) {
    sxx += (s.batch - mx) * (s.batch - mx);
    sxy += (s.batch - mx) * (s.value - my);
  }
  if (sxx <= 0.0) throw Error(ErrorKind::fit, "fit: all batch sizes are equal");

  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (const auto& s : samples) {
    const double r = s.value - (fit.slope * s.batch + fit.intercept);
    sse += r * r;
  }
  fit.rmse = std::sqrt(sse / n);
  return fit;
}

namespace {

LinearFit fit_series(std::span<const Sample> samples, const char* name,
                     std::vector<std::string>& warnings) {
  LinearFit fit = fit_line(samples);
  if (fit.slope <= 0.0)
    throw Error(ErrorKind::model_violation,
                std::string("fit: ") + name + " slope must be positive, got " +
                    std::to_string(fit.slope));
  if (fit.intercept < 0.0) {
    warnings.push_back(std::string(name) + " intercept " + std::to_string(fit.intercept) +
                       " clamped to 0");
    fit.intercept = 0.0;
    fit.intercept_clamped = true;
    double sse = 0.0;
    for (const auto& s : samples) {
      const double r = s.value - fit.slope * s.batch;
      sse += r * r;
    }
    fit.rmse = std::sqrt(sse / static_cast<double>(samples.size()));
  }
  return fit;
}

}  // namespace

ProfileFit fit_linear_profile(std::span<const Sample> latency_samples,
                              std::span<const Sample> energy_samples, int b_max) {
  std::vector<std::string> warnings;
  const LinearFit lat = fit_series(latency_samples, "latency", warnings);
  const LinearFit en = fit_series(energy_samples, "energy", warnings);
  return ProfileFit{ServiceProfile(lat.slope, lat.intercept, en.slope, en.intercept, b_max), lat,
                    en, std::move(warnings)};
}

PoissonPmf poisson_pmf(double mean, int k_max) {
  if (!finite_nonneg(mean)) throw Error(ErrorKind::domain, "poisson: mean must be >= 0");
  if (k_max < 0) throw Error(ErrorKind::domain, "poisson: k_max must be >= 0");

  // Terms past `last` are below exp(-700) relative to the mode.
  const int last = std::max(
      k_max, static_cast<int>(std::ceil(mean + 40.0 * std::sqrt(mean) + 40.0)));
  std::vector<double> terms(static_cast<std::size_t>(last) + 1, 0.0);

  if (mean == 0.0) {
    terms[0] = 1.0;
  } else if (mean < 700.0) {
    terms[0] = std::exp(-mean);
    for (int k = 0; k < last; ++k) terms[k + 1] = terms[k] * mean / (k + 1);
  } else {
    // exp(-mean) underflows; start at the mode in log space and walk outwards.
    const int mode = static_cast<int>(std::floor(mean));
    terms[mode] = std::exp(-mean + mode * std::log(mean) - std::lgamma(mode + 1.0));
    for (int k = mode; k > 0; --k) terms[k - 1] = terms[k] * k / mean;
    for (int k = mode; k < last; ++k) terms[k + 1] = terms[k] * mean / (k + 1);
  }

  PoissonPmf out;
  out.p.assign(terms.begin(), terms.begin() + k_max + 1);
  // Sum the tail from the far end so tiny tails keep full relative precision.
  double tail = 0.0;
  for (int k = last; k > k_max; --k) tail += terms[k];
  out.tail = tail;
  return out;
}

PoissonPmf arrival_count_pmf(const Workload& workload, double duration, int k_max) {
  if (!finite_nonneg(duration)) throw Error(ErrorKind::domain, "arrivals: duration must be >= 0");
  return poisson_pmf(workload.lambda * duration, k_max);
}

ServiceProfile parse_profile_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::io, std::string("profile: invalid JSON: ") + e.what());
  }
  try {
    const auto& units = j.at("units");
    const auto time = units.at("time").get<std::string>();
    const auto energy = units.at("energy").get<std::string>();
    if (time != "ms" || energy != "mJ")
      throw Error(ErrorKind::io, "profile: units must be {\"time\":\"ms\",\"energy\":\"mJ\"}, got " +
                                     time + "/" + energy);
    return ServiceProfile(j.at("alpha").get<double>(), j.at("tau0").get<double>(),
                          j.at("beta").get<double>(), j.at("zeta0").get<double>(),
                          j.at("b_max").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::io, std::string("profile: ") + e.what());
  }
}

ServiceProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open profile file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_profile_json(buf.str());
}

std::string profile_to_json(const ServiceProfile& profile) {
  nlohmann::ordered_json j;
  j["alpha"] = profile.alpha();
  j["tau0"] = profile.tau0();
  j["beta"] = profile.beta();
  j["zeta0"] = profile.zeta0();
  j["b_max"] = profile.b_max();
  j["units"] = {{"time", "ms"}, {"energy", "mJ"}};
  return j.dump(2);
}

}  // namespace batchq
