#include <cmath>
#include <random>
#include <vector>

#include "batchq/error.hpp"
#include "batchq/profile.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace batchq;

namespace {

double lgamma_pmf(double mean, int k) {
  return std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0));
}

}  // namespace

TEST_CASE("closed forms at the bundled profile") {
  const auto p = testing::p4();
  // Frozen: 32 / (0.3051*32 + 1.052) computed by hand.
  CHECK(p.latency(32) == doctest::Approx(10.8152).epsilon(1e-12));
  CHECK(p.max_throughput() == doctest::Approx(2.9587987277).epsilon(1e-9));
  CHECK(p.max_throughput() == doctest::Approx(2.96).epsilon(0.01 / 2.96));
  const auto m1 = profile_metrics(p, 1);
  CHECK(m1.latency == doctest::Approx(1.3571));
  CHECK(m1.energy == doctest::Approx(39.50));
  CHECK(m1.throughput == doctest::Approx(1.0 / 1.3571));
  CHECK(m1.energy_efficiency == doctest::Approx(1.0 / 39.50));
}

TEST_CASE("throughput grows with batch size") {
  const auto p = testing::p4();
  for (int b = 1; b < p.b_max(); ++b) CHECK(p.throughput(b + 1) > p.throughput(b));
}

TEST_CASE("batch size outside 1..b_max is a domain error") {
  const auto p = testing::p4();
  CHECK(testing::kind_of([&] { profile_metrics(p, 0); }) == ErrorKind::domain);
  CHECK(testing::kind_of([&] { profile_metrics(p, 33); }) == ErrorKind::domain);
}

TEST_CASE("profile, workload and weight validation") {
  CHECK(testing::kind_of([] { ServiceProfile(0.0, 1.0, 1.0, 1.0, 4); }) == ErrorKind::config);
  CHECK(testing::kind_of([] { ServiceProfile(1.0, -1.0, 1.0, 1.0, 4); }) == ErrorKind::config);
  CHECK(testing::kind_of([] { ServiceProfile(1.0, 1.0, 1.0, 1.0, 0); }) == ErrorKind::config);
  CHECK(testing::kind_of([] { Workload::make(0.0); }) == ErrorKind::config);
  CHECK(testing::kind_of([] { Workload::make(NAN); }) == ErrorKind::config);
  CHECK(testing::kind_of([] { Weights::make(-1.0, 1.0); }) == ErrorKind::config);
  CHECK(testing::kind_of([] { Weights::make(0.0, 0.0); }) == ErrorKind::config);
}

TEST_CASE("traffic intensity and stability flag") {
  const auto p = testing::p4();
  const auto w = Workload::from_rho(p, 0.9);
  CHECK(w.lambda == doctest::Approx(0.9 * 2.9587987277).epsilon(1e-9));
  const auto t = traffic_intensity(p, w);
  CHECK(t.rho == doctest::Approx(0.9));
  CHECK(t.stable);
  CHECK_FALSE(traffic_intensity(p, Workload::from_rho(p, 1.0)).stable);
  CHECK_FALSE(traffic_intensity(p, Workload::from_rho(p, 1.2)).stable);
}

TEST_CASE("poisson pmf matches an lgamma oracle") {
  for (double mean : {0.01, 0.5, 1.0, 3.2, 17.0, 96.0}) {
    const int k_max = static_cast<int>(mean * 3 + 30);
    const auto pmf = poisson_pmf(mean, k_max);
    REQUIRE(pmf.p.size() == static_cast<std::size_t>(k_max) + 1);
    for (int k = 0; k <= k_max; ++k) {
      const double ref = lgamma_pmf(mean, k);
      CHECK(pmf.p[k] == doctest::Approx(ref).epsilon(1e-10));
    }
    CHECK(testing::row_sum(pmf.p) + pmf.tail == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("poisson examples") {
  const auto one = poisson_pmf(1.0, 40);
  CHECK(one.p[0] == doctest::Approx(0.36787944117144233).epsilon(1e-14));
  const auto two = poisson_pmf(2.0, 40);
  CHECK(two.tail < 1e-12);
  double mean = 0.0;
  for (std::size_t k = 0; k < two.p.size(); ++k) mean += k * two.p[k];
  CHECK(mean == doctest::Approx(2.0).epsilon(1e-10));
  const auto zero = poisson_pmf(0.0, 5);
  CHECK(zero.p[0] == 1.0);
  CHECK(zero.tail == 0.0);
}

TEST_CASE("poisson tail is accurate when the truncation cuts the bulk") {
  // P(K > 5) for mean 8, frozen from the complementary finite sum.
  const auto pmf = poisson_pmf(8.0, 5);
  double head = 0.0;
  for (int k = 0; k <= 5; ++k) head += lgamma_pmf(8.0, k);
  CHECK(pmf.tail == doctest::Approx(1.0 - head).epsilon(1e-12));
  CHECK(pmf.tail == doctest::Approx(0.8087639379).epsilon(1e-9));
}

TEST_CASE("poisson stays finite for large means") {
  const auto pmf = poisson_pmf(900.0, 1200);
  CHECK(pmf.p[900] == doctest::Approx(lgamma_pmf(900.0, 900)).epsilon(1e-9));
  CHECK(testing::row_sum(pmf.p) + pmf.tail == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("poisson rejects bad arguments") {
  CHECK(testing::kind_of([] { poisson_pmf(-1.0, 4); }) == ErrorKind::domain);
  CHECK(testing::kind_of([] { poisson_pmf(1.0, -1); }) == ErrorKind::domain);
}

TEST_CASE("arrival counts scale with lambda * duration") {
  const auto a = arrival_count_pmf(Workload::make(0.5), 4.0, 20);
  const auto b = poisson_pmf(2.0, 20);
  for (std::size_t k = 0; k < a.p.size(); ++k) CHECK(a.p[k] == doctest::Approx(b.p[k]));
}

TEST_CASE("line fit recovers exact coefficients") {
  std::vector<Sample> s;
  for (int b = 1; b <= 32; b *= 2) s.push_back({double(b), 0.3051 * b + 1.052});
  const auto f = fit_line(s);
  CHECK(f.slope == doctest::Approx(0.3051).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(1.052).epsilon(1e-12));
  CHECK(f.rmse < 1e-12);
}

TEST_CASE("line fit on noisy samples is unbiased in expectation") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<Sample> lat, en;
  for (int rep = 0; rep < 50; ++rep)
    for (int b = 1; b <= 32; ++b) {
      lat.push_back({double(b), 0.3051 * b + 1.052 + noise(rng)});
      en.push_back({double(b), 19.90 * b + 19.60 + noise(rng)});
    }
  const auto fit = fit_linear_profile(lat, en, 32);
  CHECK(fit.profile.alpha() == doctest::Approx(0.3051).epsilon(0.01));
  CHECK(fit.profile.tau0() == doctest::Approx(1.052).epsilon(0.02));
  CHECK(fit.profile.beta() == doctest::Approx(19.90).epsilon(0.001));
  CHECK(fit.latency.rmse == doctest::Approx(0.05).epsilon(0.1));
  CHECK(fit.warnings.empty());
}

TEST_CASE("fit clamps a negative intercept and rejects a negative slope") {
  const std::vector<Sample> lat{{1, 0.5}, {2, 1.6}, {4, 3.8}};
  const std::vector<Sample> en{{1, 11}, {2, 21}, {4, 41}};
  const auto fit = fit_linear_profile(lat, en, 4);
  CHECK(fit.latency.intercept_clamped);
  CHECK(fit.profile.tau0() == 0.0);
  CHECK(fit.warnings.size() == 1);
  const std::vector<Sample> falling{{1, 5}, {2, 4}, {4, 2}};
  CHECK(testing::kind_of([&] { fit_linear_profile(falling, en, 4); }) == ErrorKind::model_violation);
  const std::vector<Sample> flat_x{{2, 1}, {2, 2}};
  CHECK(testing::kind_of([&] { fit_line(flat_x); }) == ErrorKind::fit);
  const std::vector<Sample> single{{2, 1}};
  CHECK(testing::kind_of([&] { fit_line(single); }) == ErrorKind::fit);
}

TEST_CASE("profile json round trip and unit check") {
  const auto p = testing::p4();
  const auto back = parse_profile_json(profile_to_json(p));
  CHECK(back.alpha() == p.alpha());
  CHECK(back.tau0() == p.tau0());
  CHECK(back.beta() == p.beta());
  CHECK(back.zeta0() == p.zeta0());
  CHECK(back.b_max() == p.b_max());
  const auto loaded = load_profile(BQ_TEST_DATA "/googlenet-p4.json");
  CHECK(loaded.max_throughput() == doctest::Approx(p.max_throughput()));
  CHECK(testing::kind_of([] {
          parse_profile_json(R"({"alpha":1,"tau0":1,"beta":1,"zeta0":1,"b_max":2,"units":{"time":"s","energy":"mJ"}})");
        }) == ErrorKind::io);
  CHECK(testing::kind_of([] { parse_profile_json(R"({"alpha":1})"); }) == ErrorKind::io);
  CHECK(testing::kind_of([] { parse_profile_json("not json"); }) == ErrorKind::io);
  CHECK(testing::kind_of([] { load_profile("/nonexistent/profile.json"); }) == ErrorKind::io);
}

TEST_CASE("zero-intercept profile has flat throughput and efficiency") {
  const ServiceProfile p(1.0, 0.0, 1.0, 0.0, 8);
  for (int b = 1; b <= 8; ++b) {
    const auto m = profile_metrics(p, b);
    CHECK(m.throughput == doctest::Approx(1.0));
    CHECK(m.energy_efficiency == doctest::Approx(1.0));
  }
  const ServiceProfile q(1.0, 0.0, 1.0, 0.0, 4);
  const auto t = traffic_intensity(q, Workload::make(1.0));
  CHECK(t.rho == doctest::Approx(1.0));
  CHECK_FALSE(t.stable);
  CHECK(traffic_intensity(q, Workload::make(1e-12)).rho < 1e-11);
}

TEST_CASE("small exact fit and zero-duration arrivals") {
  const std::vector<Sample> s{{1, 2}, {2, 4}, {3, 6}};
  const auto f = fit_line(s);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(0.0).epsilon(1e-12));
  const auto none = arrival_count_pmf(Workload::make(3.0), 0.0, 4);
  CHECK(none.p[0] == 1.0);
  for (int k = 1; k <= 4; ++k) CHECK(none.p[k] == 0.0);
  CHECK(testing::kind_of([] { arrival_count_pmf(Workload::make(1.0), -1.0, 3); }) == ErrorKind::domain);
}
