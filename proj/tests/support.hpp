#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.
// The oracles use plain dense linear algebra and never call the solver code.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "batchq/error.hpp"
#include "batchq/mdp.hpp"
#include "doctest.h"
#include "batchq/profile.hpp"

namespace testing {

inline batchq::ServiceProfile p4(int b_max = 32) {
  return batchq::ServiceProfile(0.3051, 1.052, 19.90, 19.60, b_max);
}

using Matrix = std::vector<std::vector<double>>;

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve_dense(Matrix a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
    if (std::abs(a[piv][k]) < 1e-300) throw std::runtime_error("singular system");
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a[i][k] / a[k][k];
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t k = n; k-- > 0;) {
    double acc = b[k];
    for (std::size_t j = k + 1; j < n; ++j) acc -= a[k][j] * x[j];
    x[k] = acc / a[k][k];
  }
  return x;
}

/// Stationary vector of an irreducible (or unichain) P: replaces the last
/// balance equation with the normalization.
inline std::vector<double> stationary_dense(const Matrix& p) {
  const std::size_t n = p.size();
  Matrix a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[j][i] = p[i][j] - (i == j ? 1.0 : 0.0);
  for (std::size_t j = 0; j < n; ++j) a[n - 1][j] = 1.0;
  std::vector<double> rhs(n, 0.0);
  rhs[n - 1] = 1.0;
  return solve_dense(a, rhs);
}

struct Enumerated {
  double g = std::numeric_limits<double>::infinity();
  std::vector<int> policy;
  std::vector<double> all_costs;  // one per enumerated policy, in odometer order
};

/// Exhaustive search over stationary deterministic policies of a discrete-time
/// MDP; each policy is scored by sum_s mu_s c(s, pi(s)). With a sojourn vector
/// the score is the semi-Markov ratio sum mu c / sum mu y instead.
template <typename Sojourn>
Enumerated enumerate_policies(const batchq::DiscreteMdp& mdp, Sojourn sojourn) {
  const std::size_t n = mdp.num_states();
  std::vector<int> pi(n, 0);
  Enumerated best;
  for (;;) {
    Matrix p(n);
    for (std::size_t s = 0; s < n; ++s) p[s] = mdp.transition_row(s, pi[s]);
    const auto mu = stationary_dense(p);
    double num = 0.0, den = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      num += mu[s] * mdp.cost(s, pi[s]);
      den += mu[s] * sojourn(s, pi[s]);
    }
    const double g = num / den;
    best.all_costs.push_back(g);
    if (g < best.g - 1e-12) {
      best.g = g;
      best.policy = pi;
    }
    std::size_t s = 0;
    while (s < n && pi[s] == mdp.max_action(s)) pi[s++] = 0;
    if (s == n) break;
    ++pi[s];
  }
  return best;
}

inline Enumerated enumerate_policies(const batchq::DiscreteMdp& mdp) {
  return enumerate_policies(mdp, [](std::size_t, int) { return 1.0; });
}

/// Composite Simpson rule on [lo, hi] with n (even) panels.
template <typename F>
double simpson(F f, double lo, double hi, int n = 2000) {
  const double h = (hi - lo) / n;
  double acc = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

/// Kind of the batchq::Error thrown by fn; fails the test when none is thrown.
template <typename Fn>
batchq::ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const batchq::Error& e) {
    return e.kind();
  }
  FAIL("expected batchq::Error");
  return batchq::ErrorKind::domain;
}

inline double row_sum(const std::vector<double>& row) {
  return std::accumulate(row.begin(), row.end(), 0.0);
}

}  // namespace testing
