#include <cmath>
#include <memory>
#include <vector>

#include "batchq/smdp.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace batchq;

namespace {

FiniteSmdp p4_model(double rho, double w1, double w2, int s_max, double c_o, int b_max = 32) {
  const auto p = testing::p4(b_max);
  return FiniteSmdp::build(p, Workload::from_rho(p, rho), Weights::make(w1, w2), {s_max, c_o});
}

}  // namespace

TEST_CASE("feasible action sets") {
  const StateSpace space{40, 32};
  CHECK(feasible_actions(space, 0) == std::vector<int>{0});
  CHECK(feasible_actions(space, 5) == std::vector<int>{0, 1, 2, 3, 4, 5});
  const auto at_so = feasible_actions(space, space.overflow());
  CHECK(at_so.size() == 33);
  CHECK(at_so.back() == 32);
  CHECK(feasible_actions(space, 40).back() == 32);
  CHECK(testing::kind_of([&] { feasible_actions(space, 42); }) == ErrorKind::domain);
}

TEST_CASE("stage cost examples") {
  const ServiceProfile p(1.0, 1.0, 1.0, 1.0, 4);
  const auto lam1 = Workload::make(1.0);
  const TruncationConfig trunc{10, 100.0};
  CHECK(stage_cost(0, 0, p, lam1, Weights::make(1.0, 3.0), trunc) == 0.0);
  CHECK(stage_cost(3, 0, p, lam1, Weights::make(1.0, 0.0), trunc) == doctest::Approx(3.0));
  CHECK(stage_cost(11, 0, p, lam1, Weights::make(1.0, 0.0), trunc) == doctest::Approx(110.0));
  CHECK(testing::kind_of([&] { stage_cost(2, 3, p, lam1, Weights::make(1, 0), trunc); }) ==
        ErrorKind::domain);
}

TEST_CASE("stage cost agrees with quadrature of the holding cost") {
  const auto p = testing::p4();
  const auto wl = Workload::from_rho(p, 0.7);
  const double lam = wl.lambda;
  const auto w = Weights::make(1.3, 0.4);
  const TruncationConfig trunc{50, 0.0};
  for (int s : {1, 7, 32, 50}) {
    for (int a : {1, 4, 16, 32}) {
      if (a > s) continue;
      const double tau = p.latency(a);
      // Expected holding cost: (w1/lambda) * integral over service of (s + lambda t).
      const double hold = testing::simpson([&](double t) { return s + lam * t; }, 0.0, tau);
      const double expect = w.w1 / lam * hold + w.w2 * p.energy(a);
      CHECK(stage_cost(s, a, p, wl, w, trunc) == doctest::Approx(expect).epsilon(1e-10));
    }
    // Waiting: the sojourn is Exp(lambda); E[integral of s dt] = s * E[T].
    const double mean_wait =
        testing::simpson([&](double t) { return t * lam * std::exp(-lam * t); }, 0.0, 60.0 / lam, 20000);
    CHECK(stage_cost(s, 0, p, wl, w, trunc) == doctest::Approx(w.w1 / lam * s * mean_wait).epsilon(1e-8));
  }
}

TEST_CASE("transition row examples") {
  const ServiceProfile p(0.5, 0.0, 1.0, 0.0, 4);
  const TruncationConfig trunc{10, 0.0};
  const auto wait = transition_row(4, 0, p, Workload::make(0.5), trunc);
  CHECK(wait[5] == 1.0);
  CHECK(testing::row_sum(wait) == 1.0);

  const auto quiet = transition_row(6, 4, p, Workload::make(1e-12), trunc);
  CHECK(quiet[2] == doctest::Approx(1.0).epsilon(1e-10));

  // lambda * tau(4) = 0.5 * 2 = 1.
  const auto row = transition_row(4, 4, p, Workload::make(0.5), trunc);
  double fact = 1.0;
  for (int k = 0; k <= 10; ++k) {
    if (k > 0) fact *= k;
    CHECK(row[k] == doctest::Approx(std::exp(-1.0) / fact).epsilon(1e-13));
  }
  double head = 0.0;
  for (int k = 0; k <= 10; ++k) head += row[k];
  CHECK(row[11] == doctest::Approx(1.0 - head).epsilon(1e-6));
  CHECK(testing::row_sum(row) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("P4 model shape") {
  const auto m = p4_model(0.9, 1, 1, 70, 100);
  CHECK(m.num_states() == 72);
  CHECK(m.overflow() == 71);
  CHECK(m.max_action(71) == 32);
  CHECK(m.max_action(3) == 3);
  CHECK(m.sojourn(0) == doctest::Approx(1.0 / m.workload().lambda));
  CHECK(m.sojourn(32) == doctest::Approx(10.8152));
}

TEST_CASE("every row is stochastic and matches the direct kernel") {
  for (int s_max : {32, 45, 70}) {
    const auto m = p4_model(0.9, 1, 1, s_max, 100);
    for (std::size_t s = 0; s < m.num_states(); ++s) {
      for (int a = 0; a <= m.max_action(s); ++a) {
        const auto row = m.transition_row(s, a);
        REQUIRE(row.size() == m.num_states());
        CHECK(testing::row_sum(row) == doctest::Approx(1.0).epsilon(1e-10));
        const auto direct = transition_row(s, a, m.profile(), m.workload(), m.truncation());
        for (std::size_t j = 0; j < row.size(); ++j) {
          CHECK(row[j] == doctest::Approx(direct[j]).epsilon(1e-12));
          CHECK(m.prob(s, a, j) == row[j]);
        }
        CHECK(m.overflow_mass(s, a) == row[m.overflow()]);
      }
    }
  }
}

TEST_CASE("stored costs equal direct stage costs") {
  const auto m = p4_model(0.6, 1, 2, 40, 30);
  for (std::size_t s = 0; s < m.num_states(); ++s)
    for (int a = 0; a <= m.max_action(s); ++a)
      CHECK(m.cost(s, a) ==
            stage_cost(s, a, m.profile(), m.workload(), m.weights(), m.truncation()));
}

TEST_CASE("zero overflow cost makes S_o cost the s_max cost") {
  const auto m = p4_model(0.9, 1, 1, 40, 0.0);
  for (int a = 0; a <= 32; ++a) CHECK(m.cost(m.overflow(), a) == m.cost(40, a));
  const auto n = p4_model(0.9, 1, 1, 40, 7.0);
  for (int a = 0; a <= 32; ++a)
    CHECK(n.cost(n.overflow(), a) == doctest::Approx(m.cost(40, a) + 7.0 * n.sojourn(a)));
}

TEST_CASE("overflow mass shrinks as the truncation grows") {
  const int s = 32;
  double prev = 1.0;
  for (int s_max = 32; s_max <= 80; s_max += 4) {
    const auto m = p4_model(0.9, 1, 1, s_max, 1);
    for (int a : {1, 16, 32}) CHECK(m.overflow_mass(s, a) <= 1.0);
    const double mass = m.overflow_mass(s, 16);
    CHECK(mass <= prev);
    prev = mass;
  }
}

TEST_CASE("expected and sampling agree with the dense row") {
  const auto m = p4_model(0.8, 1, 0, 36, 10);
  std::vector<double> v(m.num_states());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::sin(0.3 * j) + 0.01 * j * j;
  for (std::size_t s : {0ul, 5ul, 20ul, 36ul, 37ul}) {
    for (int a = 0; a <= m.max_action(s); ++a) {
      const auto row = m.transition_row(s, a);
      double dot = 0.0;
      for (std::size_t j = 0; j < v.size(); ++j) dot += row[j] * v[j];
      CHECK(m.expected(s, a, v) == doctest::Approx(dot).epsilon(1e-12));
      // Inverse CDF: the sampled index is the first whose cumulative mass passes u.
      for (double u : {0.0, 0.1, 0.5, 0.9, 0.999999}) {
        const auto got = m.sample_next(s, a, u);
        double before = 0.0;
        for (std::size_t j = 0; j < got; ++j) before += row[j];
        CHECK(row[got] > 0.0);
        CHECK(before <= u + 1e-12);
        CHECK(u < before + row[got] + 1e-12);
      }
    }
  }
}

TEST_CASE("build rejects unstable and malformed configurations") {
  const auto p = testing::p4();
  const auto w = Weights::make(1, 1);
  CHECK(testing::kind_of([&] { FiniteSmdp::build(p, Workload::from_rho(p, 1.0), w, {70, 1}); }) ==
        ErrorKind::stability);
  CHECK(testing::kind_of([&] { FiniteSmdp::build(p, Workload::from_rho(p, 0.5), w, {31, 1}); }) ==
        ErrorKind::config);
  CHECK(testing::kind_of([&] { FiniteSmdp::build(p, Workload::from_rho(p, 0.5), w, {40, -1}); }) ==
        ErrorKind::config);
  const auto m = p4_model(0.5, 1, 1, 32, 0);
  CHECK(m.num_states() == 34);
  CHECK(testing::kind_of([&] { m.arrivals(0, 1); }) == ErrorKind::domain);
}
