#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "batchq/discretizer.hpp"
#include "batchq/policy.hpp"
#include "batchq/solver.hpp"
#include "batchq/tabular_mdp.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace batchq;

namespace {

std::shared_ptr<const FiniteSmdp> p4_model(double rho, double w1, double w2, int s_max, double c_o) {
  const auto p = testing::p4();
  return std::make_shared<const FiniteSmdp>(
      FiniteSmdp::build(p, Workload::from_rho(p, rho), Weights::make(w1, w2), {s_max, c_o}));
}

// Random dense MDP: every row strictly positive, so any policy is ergodic.
TabularMdp random_mdp(std::uint64_t seed, std::size_t states, int actions) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<std::vector<double>> costs(states);
  std::vector<std::vector<std::vector<double>>> rows(states);
  for (std::size_t s = 0; s < states; ++s)
    for (int a = 0; a < actions; ++a) {
      costs[s].push_back(10.0 * u(rng));
      std::vector<double> row(states);
      for (auto& x : row) x = u(rng);
      const double total = testing::row_sum(row);
      for (auto& x : row) x /= total;
      rows[s].push_back(row);
    }
  return TabularMdp(costs, rows);
}

std::vector<double> mu_times_p(const std::vector<double>& mu, const ChainMatrix& c) {
  std::vector<double> out(c.n, 0.0);
  for (std::size_t i = 0; i < c.n; ++i)
    for (std::size_t j = 0; j < c.n; ++j) out[j] += mu[i] * c(i, j);
  return out;
}

}  // namespace

TEST_CASE("single-state single-action chain") {
  const TabularMdp one({{4.25}}, {{{1.0}}});
  const auto r = relative_value_iteration(one, {});
  CHECK(r.report.g == 4.25);
  CHECK(r.report.converged);
  CHECK(r.report.iterations <= 2);
  REQUIRE(r.report.h.size() == 1);
  CHECK(r.report.h[0] == 0.0);
}

TEST_CASE("random 3-state models match policy enumeration") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto mdp = random_mdp(seed, 3, 3);
    const auto oracle = testing::enumerate_policies(mdp);
    const auto r = relative_value_iteration(mdp, {1e-11, 100000, 0});
    CHECK(r.report.converged);
    CHECK(r.report.g == doctest::Approx(oracle.g).epsilon(1e-9));
    CHECK(r.policy.actions == oracle.policy);
  }
}

TEST_CASE("3-state batching model matches policy enumeration") {
  // b_max = 1, s_max = 1: states {0, 1, S_o}; the semi-Markov ratio is the oracle.
  const ServiceProfile p(0.4, 0.2, 2.0, 1.0, 1);
  for (double lam : {0.3, 0.9, 1.5}) {
    for (double c_o : {0.0, 5.0, 100.0}) {
      const auto m = std::make_shared<const FiniteSmdp>(
          FiniteSmdp::build(p, Workload::make(lam), Weights::make(1.0, 0.5), {1, c_o}));
      std::vector<std::vector<double>> costs(3);
      std::vector<std::vector<std::vector<double>>> rows(3);
      for (std::size_t s = 0; s < 3; ++s)
        for (int a = 0; a <= m->max_action(s); ++a) {
          costs[s].push_back(m->cost(s, a));
          rows[s].push_back(m->transition_row(s, a));
        }
      const TabularMdp raw(costs, rows);
      const auto oracle = testing::enumerate_policies(raw, [&](std::size_t, int a) { return m->sojourn(a); });
      const auto dt = to_dtmdp(m, 0.99);
      const auto r = relative_value_iteration(dt, {1e-11, 1000000, 0});
      CHECK(r.report.converged);
      CHECK(r.report.g == doctest::Approx(oracle.g).epsilon(1e-8));
      CHECK(r.policy.actions == oracle.policy);
      const auto eval = evaluate_policy(r.policy, *m, 1.0);
      CHECK(eval.g_pi == doctest::Approx(oracle.g).epsilon(1e-10));
    }
  }
}

TEST_CASE("ties go to the smallest action") {
  // Two identical actions everywhere.
  const TabularMdp twin({{1.0, 1.0}, {2.0, 2.0}},
                        {{{0.5, 0.5}, {0.5, 0.5}}, {{0.3, 0.7}, {0.3, 0.7}}});
  const auto r = relative_value_iteration(twin, {});
  CHECK(r.policy.actions == std::vector<int>{0, 0});
}

TEST_CASE("optimality residual is within epsilon at convergence") {
  const auto m = p4_model(0.7, 1, 1, 50, 100);
  const auto dt = to_dtmdp(m, 0.99);
  const SolveOptions opts{0.01, 10000, 0};
  const auto r = relative_value_iteration(dt, opts);
  REQUIRE(r.report.converged);
  CHECK(r.report.final_span < opts.epsilon);
  const auto res = optimality_residual(dt, r.report.g, r.report.h);
  CHECK(span(res) <= opts.epsilon);
  for (double x : res) CHECK(std::abs(x) <= opts.epsilon);
}

TEST_CASE("solving twice gives bit-identical output") {
  const auto m = p4_model(0.5, 1, 5, 40, 100);
  const auto dt = to_dtmdp(m, 0.99);
  const auto a = relative_value_iteration(dt, {});
  const auto b = relative_value_iteration(dt, {});
  CHECK(a.policy == b.policy);
  CHECK(a.report.h == b.report.h);
  CHECK(a.report.g == b.report.g);
}

TEST_CASE("reference P4 operating point") {
  // rho 0.9, w = [1, 1], c_o = 100, s_max = 70: about 1483 sweeps and g near 66.1377.
  const auto m = p4_model(0.9, 1, 1, 70, 100);
  const auto r = relative_value_iteration(to_dtmdp(m, 0.99), {0.01, 10000, 0});
  CHECK(r.report.converged);
  CHECK(r.report.iterations == doctest::Approx(1483).epsilon(0.15));
  CHECK(r.report.g == doctest::Approx(66.1377).epsilon(0.0005));
  const auto e = evaluate_policy(r.policy, *m, 0.001);
  CHECK(e.g_pi == doctest::Approx(66.1377).epsilon(0.0005));
  CHECK(e.acceptable);
  // One sweep multiplies every stored (s, a) pair against the full state vector.
  CHECK(r.report.multiplications_per_iteration == double(m->num_pairs() * m->num_states()));
}

TEST_CASE("iteration cap is reported, not thrown") {
  const auto m = p4_model(0.9, 1, 1, 40, 0);
  const auto r = relative_value_iteration(to_dtmdp(m, 0.99), {1e-9, 5, 0});
  CHECK_FALSE(r.report.converged);
  CHECK(r.report.iterations == 5);
  CHECK(r.policy.size() == m->num_states());
  validate_policy(r.policy);
}

TEST_CASE("solver argument checks") {
  const TabularMdp one({{1.0}}, {{{1.0}}});
  CHECK(testing::kind_of([&] { relative_value_iteration(one, {0.0, 10, 0}); }) == ErrorKind::config);
  CHECK(testing::kind_of([&] { relative_value_iteration(one, {0.1, 0, 0}); }) == ErrorKind::config);
  CHECK(testing::kind_of([&] { relative_value_iteration(one, {0.1, 10, 1}); }) == ErrorKind::domain);
}

TEST_CASE("stationary distribution examples") {
  ChainMatrix flip{2, {0, 1, 1, 0}};
  const auto mu = stationary_distribution(flip);
  CHECK(mu[0] == doctest::Approx(0.5));
  CHECK(mu[1] == doctest::Approx(0.5));
  ChainMatrix single{1, {1.0}};
  CHECK(stationary_distribution(single) == std::vector<double>{1.0});
  // Transient state 0 feeding a closed pair.
  ChainMatrix feed{3, {0.2, 0.4, 0.4, 0, 0.5, 0.5, 0, 0.25, 0.75}};
  const auto f = stationary_distribution(feed);
  CHECK(f[0] == 0.0);
  CHECK(f[1] == doctest::Approx(1.0 / 3.0));
  CHECK(f[2] == doctest::Approx(2.0 / 3.0));
  ChainMatrix split{3, {1, 0, 0, 0.5, 0, 0.5, 0, 0, 1}};
  CHECK(testing::kind_of([&] { stationary_distribution(split); }) == ErrorKind::structure);
}

TEST_CASE("stationary distributions balance on P4 chains") {
  for (double rho : {0.3, 0.9}) {
    const auto m = p4_model(rho, 1, 1, 70, 100);
    for (const auto& pol : {make_work_conserving(32, 70), make_static(16, 32, 70),
                            relative_value_iteration(to_dtmdp(m, 0.99), {}).policy}) {
      const auto chain = policy_chain(*m, pol);
      const auto mu = stationary_distribution(chain);
      double total = 0.0;
      for (double x : mu) {
        CHECK(x >= 0.0);
        total += x;
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
      const auto back = mu_times_p(mu, chain);
      double err = 0.0;
      for (std::size_t j = 0; j < mu.size(); ++j) err = std::max(err, std::abs(back[j] - mu[j]));
      CHECK(err <= 1e-8);
      // Independent dense solve.
      testing::Matrix dense(chain.n, std::vector<double>(chain.n));
      for (std::size_t i = 0; i < chain.n; ++i)
        for (std::size_t j = 0; j < chain.n; ++j) dense[i][j] = chain(i, j);
      const auto ref = testing::stationary_dense(dense);
      // Pivoted elimination loses relative accuracy below ~1e-15, so compare absolutely.
      for (std::size_t j = 0; j < mu.size(); ++j) CHECK(std::abs(mu[j] - ref[j]) <= 1e-12 + 1e-8 * ref[j]);
    }
  }
}

TEST_CASE("evaluation report identities") {
  const auto m = p4_model(0.6, 1, 2, 60, 100);
  const auto pol = relative_value_iteration(to_dtmdp(m, 0.99), {}).policy;
  const auto e = evaluate_policy(pol, *m, 0.001);
  double num = 0.0, den = 0.0;
  for (std::size_t s = 0; s < m->num_states(); ++s) {
    num += e.mu[s] * m->cost(s, pol.actions[s]);
    den += e.mu[s] * m->sojourn(pol.actions[s]);
  }
  CHECK(e.g_pi == doctest::Approx(num / den).epsilon(1e-12));
  CHECK(e.mean_sojourn == doctest::Approx(den).epsilon(1e-12));
  CHECK(e.delta_pi <= e.g_pi);
  CHECK(e.delta_pi >= 0.0);
  CHECK(e.acceptable == (e.delta_pi < 0.001));
  CHECK(e.avg_response_time == doctest::Approx(e.avg_queue_len / m->workload().lambda));
  CHECK(e.energy_efficiency == doctest::Approx(m->workload().lambda / e.avg_power));
  // g = (w1/lambda) L + w2 P when the overflow term is negligible.
  const double split = e.avg_queue_len / m->workload().lambda + 2.0 * e.avg_power;
  CHECK(split == doctest::Approx(e.g_pi - e.delta_pi).epsilon(1e-6));
}

TEST_CASE("an unreachable overflow state contributes nothing") {
  // At rho = 0.1 the overflow mass sits hundreds of orders of magnitude below
  // anything a tolerance could ask for.
  const auto m = p4_model(0.1, 1, 0, 400, 100);
  const auto e = evaluate_policy(make_work_conserving(32, 400), *m, 1e-200);
  CHECK(e.mu.back() < 1e-250);
  CHECK(e.delta_pi < 1e-200);
  CHECK(e.acceptable);
}

TEST_CASE("evaluate rejects a mis-sized policy") {
  const auto m = p4_model(0.5, 1, 0, 40, 1);
  CHECK(testing::kind_of([&] { evaluate_policy(make_work_conserving(32, 41), *m, 0.1); }) ==
        ErrorKind::domain);
}

TEST_CASE("RVI is never beaten by the benchmark policies") {
  for (double rho : {0.2, 0.6}) {
    for (double w2 : {0.0, 10.0}) {
      const auto m = p4_model(rho, 1, w2, 80, 100);
      const auto rvi = evaluate_policy(relative_value_iteration(to_dtmdp(m, 0.99), {}).policy, *m, 1);
      CHECK(rvi.g_pi <= evaluate_policy(make_work_conserving(32, 80), *m, 1).g_pi + 1e-9);
      for (int b : {8, 16, 32}) {
        if (rho * m->profile().max_throughput() >= m->profile().throughput(b)) continue;
        CHECK(rvi.g_pi <= evaluate_policy(make_static(b, 32, 80), *m, 1).g_pi + 1e-9);
      }
    }
  }
}

TEST_CASE("minimal truncation search") {
  const auto p = testing::p4();
  const auto wl = Workload::from_rho(p, 0.9);
  const auto w = Weights::make(1, 1);
  SmaxSearchOptions opts;
  opts.c_o = 100;
  opts.delta = 1e6;
  opts.grid = {32};
  CHECK(find_min_smax(p, wl, w, opts).s_max == 32);

  opts.delta = 1e-30;
  opts.grid = {32, 36};
  opts.stop_at_first = false;
  try {
    find_min_smax(p, wl, w, opts);
    FAIL("expected exhaustion");
  } catch (const SearchExhausted& e) {
    REQUIRE(e.records().size() == 2);
    CHECK(e.records()[1].s_max == 36);
    CHECK(e.records()[0].space_complexity == 32.0 * 32);
    CHECK(e.records()[0].time_complexity == double(e.records()[0].iterations) * 32 * 32 * 32);
  }

  opts.grid = {40, 32};
  CHECK(testing::kind_of([&] { find_min_smax(p, wl, w, opts); }) == ErrorKind::config);
  opts.grid = {20};
  CHECK(testing::kind_of([&] { find_min_smax(p, wl, w, opts); }) == ErrorKind::config);
}

TEST_CASE("truncation search finds the reference s_max for c_o = 100") {
  const auto p = testing::p4();
  SmaxSearchOptions opts;
  opts.c_o = 100;
  opts.delta = 0.001;
  for (int s = 60; s <= 80; ++s) opts.grid.push_back(s);
  const auto r = find_min_smax(p, Workload::from_rho(p, 0.9), Weights::make(1, 1), opts);
  CHECK(r.s_max == doctest::Approx(70).epsilon(0.10));
  CHECK(r.records.back().s_max == r.s_max);
  CHECK(r.records.back().acceptable);
  for (std::size_t i = 0; i + 1 < r.records.size(); ++i) CHECK_FALSE(r.records[i].acceptable);
}
