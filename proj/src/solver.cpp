#include "batchq/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "batchq/discretizer.hpp"
#include "batchq/parallel.hpp"

namespace batchq {

double span(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

namespace {

// min_a { c(s,a) + E[values | s,a] } with the smallest minimizing action.
std::pair<double, int> best_action(const DiscreteMdp& mdp, std::size_t s,
                                   std::span<const double> values) {
  double best = std::numeric_limits<double>::infinity();
  int arg = 0;
  for (int a = 0; a <= mdp.max_action(s); ++a) {
    const double v = mdp.cost(s, a) + mdp.expected(s, a, values);
    if (v < best) {
      best = v;
      arg = a;
    }
  }
  return {best, arg};
}

}  // namespace

SolveResult relative_value_iteration(const DiscreteMdp& mdp, const SolveOptions& options) {
  const std::size_t n = mdp.num_states();
  if (!(options.epsilon > 0.0)) throw Error(ErrorKind::config, "rvi: epsilon must be > 0");
  if (options.iter_max < 1) throw Error(ErrorKind::config, "rvi: iter_max must be >= 1");
  if (options.ref_state >= n) throw Error(ErrorKind::domain, "rvi: reference state out of range");

  SolveReport report;
  double pairs = 0.0;
  for (std::size_t s = 0; s < n; ++s) pairs += mdp.max_action(s) + 1;
  report.multiplications_per_iteration = pairs * static_cast<double>(n);

  std::vector<double> J(n, 0.0), next(n, 0.0), diff(n, 0.0);
  for (long long it = 1; it <= options.iter_max; ++it) {
    const double bias = J[options.ref_state];
    for (std::size_t s = 0; s < n; ++s) next[s] = best_action(mdp, s, J).first - bias;
    for (std::size_t s = 0; s < n; ++s) diff[s] = next[s] - J[s];
    J.swap(next);
    report.iterations = it;
    report.final_span = span(diff);
    if (report.final_span < options.epsilon) {
      report.converged = true;
      break;
    }
  }

  Policy policy{0, std::vector<int>(n, 0)};
  for (std::size_t s = 0; s < n; ++s) {
    policy.actions[s] = best_action(mdp, s, J).second;
    policy.b_max = std::max(policy.b_max, mdp.max_action(s));
  }
  report.g = J[options.ref_state];
  for (double& v : J) v -= report.g;
  report.h = std::move(J);
  return SolveResult{std::move(policy), std::move(report)};
}

std::vector<double> optimality_residual(const DiscreteMdp& mdp, double g, std::span<const double> h) {
  std::vector<double> r(mdp.num_states());
  for (std::size_t s = 0; s < r.size(); ++s) r[s] = best_action(mdp, s, h).first - g - h[s];
  return r;
}

ChainMatrix policy_chain(const FiniteSmdp& model, const Policy& policy) {
  if (policy.size() != model.num_states() || policy.b_max != model.profile().b_max())
    throw Error(ErrorKind::domain, "policy shape (" + std::to_string(policy.size()) + " states, b_max " +
                                       std::to_string(policy.b_max) + ") does not match the model");
  validate_policy(policy);
  ChainMatrix chain{model.num_states(), std::vector<double>(model.num_states() * model.num_states())};
  for (std::size_t s = 0; s < chain.n; ++s) {
    const auto row = model.transition_row(s, policy.actions[s]);
    std::copy(row.begin(), row.end(), chain.p.begin() + static_cast<std::ptrdiff_t>(s * chain.n));
  }
  return chain;
}

namespace {

// Strongly connected components of the positive-entry graph (iterative Tarjan).
std::vector<int> components(const ChainMatrix& P, int& count) {
  const std::size_t n = P.n;
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> frames;  // (node, next neighbour)
  int counter = 0;
  count = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    frames.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!frames.empty()) {
      auto& [v, j] = frames.back();
      bool descended = false;
      for (; j < n; ++j) {
        if (P(v, j) <= 0.0) continue;
        if (index[j] == -1) {
          index[j] = low[j] = counter++;
          stack.push_back(j);
          on_stack[j] = 1;
          frames.emplace_back(j, 0);
          ++frames[frames.size() - 2].second;
          descended = true;
          break;
        }
        if (on_stack[j]) low[v] = std::min(low[v], index[j]);
      }
      if (descended) continue;
      const std::size_t done = v;
      if (low[done] == index[done]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = count;
        } while (w != done);
        ++count;
      }
      frames.pop_back();
      if (!frames.empty()) {
        const std::size_t parent = frames.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
    }
  }
  return comp;
}

// Grassmann-Taksar-Heyman elimination on an irreducible chain. Eliminating
// the highest state first keeps the lower bandwidth of each row, so a chain
// that moves down by at most B states costs O(n^2 B) rather than O(n^3).
std::vector<double> gth(ChainMatrix A) {
  const std::size_t n = A.n;
  std::vector<std::size_t> lo(n);  // first nonzero column per row
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = 0;
    while (j < n && A(i, j) == 0.0) ++j;
    lo[i] = j;
  }
  for (std::size_t k = n; k-- > 1;) {
    double out = 0.0;
    for (std::size_t j = lo[k]; j < k; ++j) out += A(k, j);
    for (std::size_t i = 0; i < k; ++i) {
      double& aik = A(i, k);
      if (aik == 0.0) continue;
      aik /= out;
      for (std::size_t j = lo[k]; j < k; ++j) A(i, j) += aik * A(k, j);
      lo[i] = std::min(lo[i], lo[k]);
    }
  }
  std::vector<double> pi(n, 0.0);
  pi[0] = 1.0;
  double total = 1.0;
  for (std::size_t k = 1; k < n; ++k) {
    double v = 0.0;
    for (std::size_t i = 0; i < k; ++i) v += pi[i] * A(i, k);
    pi[k] = v;
    total += v;
  }
  for (double& x : pi) x /= total;
  return pi;
}

std::vector<double> lazy_power_iteration(const ChainMatrix& P) {
  const std::size_t n = P.n;
  std::vector<double> x(n, 1.0 / static_cast<double>(n)), y(n);
  for (int it = 0; it < 1000000; ++it) {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = 0.5 * x[i];
      if (xi == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) y[j] += xi * P(i, j);
      y[i] += xi;
    }
    double total = 0.0, change = 0.0;
    for (double v : y) total += v;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] /= total;
      change += std::abs(y[i] - x[i]);
    }
    x.swap(y);
    if (change < 1e-12) break;
  }
  return x;
}

constexpr std::size_t kDirectSolveLimit = 4000;

}  // namespace

std::vector<double> stationary_distribution(const ChainMatrix& chain) {
  const std::size_t n = chain.n;
  if (n == 0) throw Error(ErrorKind::structure, "empty chain");
  int count = 0;
  const auto comp = components(chain, count);

  std::vector<char> closed(static_cast<std::size_t>(count), 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (chain(i, j) > 0.0 && comp[i] != comp[j]) closed[static_cast<std::size_t>(comp[i])] = 0;

  std::vector<int> closed_ids;
  for (int c = 0; c < count; ++c)
    if (closed[static_cast<std::size_t>(c)]) closed_ids.push_back(c);
  if (closed_ids.size() != 1) {
    std::string msg = "chain has " + std::to_string(closed_ids.size()) + " recurrent classes:";
    for (int c : closed_ids) {
      msg += " {";
      int shown = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (comp[i] != c) continue;
        if (shown++ == 8) {
          msg += " ...";
          break;
        }
        msg += (shown > 1 ? "," : "") + std::to_string(i);
      }
      msg += "}";
    }
    throw Error(ErrorKind::structure, msg);
  }

  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < n; ++i)
    if (comp[i] == closed_ids[0]) members.push_back(i);
  ChainMatrix sub{members.size(), std::vector<double>(members.size() * members.size())};
  for (std::size_t a = 0; a < members.size(); ++a)
    for (std::size_t b = 0; b < members.size(); ++b) sub(a, b) = chain(members[a], members[b]);

  const auto pi = members.size() == 1 ? std::vector<double>{1.0}
                  : members.size() <= kDirectSolveLimit ? gth(std::move(sub))
                                                        : lazy_power_iteration(sub);
  std::vector<double> mu(n, 0.0);
  for (std::size_t a = 0; a < members.size(); ++a) mu[members[a]] = pi[a];
  return mu;
}

std::vector<double> stationary_distribution(const Policy& policy, const FiniteSmdp& model) {
  return stationary_distribution(policy_chain(model, policy));
}

EvalReport evaluate_policy(const Policy& policy, const FiniteSmdp& model, double delta) {
  EvalReport r;
  r.mu = stationary_distribution(policy, model);
  const auto& profile = model.profile();
  const double lambda = model.workload().lambda;
  const StateSpace& space = model.space();

  double cost = 0.0, time = 0.0, area = 0.0, energy = 0.0;
  for (std::size_t s = 0; s < r.mu.size(); ++s) {
    const double m = r.mu[s];
    if (m == 0.0) continue;
    const int a = policy.actions[s];
    const double q = space.queue_length(s);
    const double y = model.sojourn(a);
    cost += m * model.cost(s, a);
    time += m * y;
    if (a == 0) {
      area += m * q / lambda;
    } else {
      const double tau = profile.latency(a);
      area += m * (q * tau + 0.5 * lambda * tau * tau);
      energy += m * profile.energy(a);
    }
  }
  const std::size_t so = model.overflow();
  r.mean_sojourn = time;
  r.g_pi = cost / time;
  r.delta_pi = r.mu[so] * model.cost(so, policy.actions[so]) / time;
  r.acceptable = r.delta_pi < delta;
  r.avg_queue_len = area / time;
  r.avg_response_time = r.avg_queue_len / lambda;
  r.avg_power = energy / time;
  r.energy_efficiency = r.avg_power > 0.0 ? lambda / r.avg_power : 0.0;
  return r;
}

SmaxRecord evaluate_truncation(const ServiceProfile& profile, const Workload& workload,
                               const Weights& weights, int s_max, const SmaxSearchOptions& options) {
  auto model = std::make_shared<const FiniteSmdp>(
      FiniteSmdp::build(profile, workload, weights, TruncationConfig{s_max, options.c_o}));
  const DtMdp dt = to_dtmdp(model, options.eta_fraction);
  const SolveResult solved = relative_value_iteration(dt, options.solve);
  const EvalReport eval = evaluate_policy(solved.policy, *model, options.delta);

  SmaxRecord rec;
  rec.s_max = s_max;
  rec.g_pi = eval.g_pi;
  rec.delta_pi = eval.delta_pi;
  rec.iterations = solved.report.iterations;
  rec.converged = solved.report.converged;
  const double b = profile.b_max();
  rec.space_complexity = b * s_max;
  rec.time_complexity = static_cast<double>(rec.iterations) * b * s_max * static_cast<double>(s_max);
  rec.acceptable = eval.acceptable;
  rec.control_limit = detect_control_limit(solved.policy);
  return rec;
}

SmaxSearchResult find_min_smax(const ServiceProfile& profile, const Workload& workload,
                               const Weights& weights, const SmaxSearchOptions& options) {
  const auto& grid = options.grid;
  if (grid.empty()) throw Error(ErrorKind::config, "s_max grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < profile.b_max()) throw Error(ErrorKind::config, "s_max grid values must be >= b_max");
    if (i > 0 && grid[i] <= grid[i - 1]) throw Error(ErrorKind::config, "s_max grid must be ascending");
  }

  const unsigned jobs = std::max(1u, options.jobs);
  SmaxSearchResult result;
  for (std::size_t start = 0; start < grid.size(); start += jobs) {
    const std::size_t chunk = std::min<std::size_t>(jobs, grid.size() - start);
    std::vector<SmaxRecord> batch(chunk);
    parallel_for(chunk, jobs, [&](std::size_t i) {
      batch[i] = evaluate_truncation(profile, workload, weights, grid[start + i], options);
    });
    for (auto& rec : batch) {
      const bool first_hit = rec.acceptable && result.s_max == 0;
      if (first_hit) result.s_max = rec.s_max;
      result.records.push_back(rec);
      if (first_hit && options.stop_at_first) return result;
    }
  }
  if (result.s_max == 0) throw SearchExhausted(std::move(result.records));
  return result;
}

}  // namespace batchq
