#include "batchq/qlearn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "batchq/error.hpp"

namespace batchq {

QTable::QTable(const DiscreteMdp& mdp) {
  const std::size_t n = mdp.num_states();
  offset_.resize(n + 1);
  std::size_t total = 0;
  for (std::size_t s = 0; s < n; ++s) {
    offset_[s] = total;
    total += static_cast<std::size_t>(mdp.max_action(s)) + 1;
  }
  offset_[n] = total;
  q_.assign(total, 0.0);
}

int QTable::greedy(std::size_t s) const {
  const double* row = q_.data() + offset_[s];
  int best = 0;
  for (int a = 1; a <= max_action(s); ++a)
    if (row[a] > row[best]) best = a;
  return best;
}

double QTable::max_value(std::size_t s) const { return at(s, greedy(s)); }

Policy QTable::greedy_policy() const {
  Policy p{0, std::vector<int>(num_states(), 0)};
  for (std::size_t s = 0; s < num_states(); ++s) {
    p.actions[s] = greedy(s);
    p.b_max = std::max(p.b_max, max_action(s));
  }
  return p;
}

Transition sample_transition(const DiscreteMdp& env, std::size_t s, int a, Rng& rng) {
  if (!env.feasible(s, a))
    throw Error(ErrorKind::domain, "action " + std::to_string(a) + " infeasible at state " + std::to_string(s));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return Transition{env.sample_next(s, a, unit(rng)), -env.cost(s, a)};
}

void q_update(QTable& q, std::size_t s, int a, std::size_t next, double reward, double learning_rate) {
  double& entry = q.at(s, a);
  entry += learning_rate * (reward + q.max_value(next) - q.reference() - entry);
}

QLearnResult train(const DiscreteMdp& env, const QLearnConfig& config,
                   const std::function<void(const StepInfo&)>& observer) {
  if (!(config.epsilon0 > 0.0 && config.epsilon0 <= 1.0))
    throw Error(ErrorKind::config, "qlearn: epsilon0 must lie in (0, 1]");
  if (config.iterations < 1) throw Error(ErrorKind::config, "qlearn: iterations must be >= 1");

  Rng rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  QLearnResult out{Policy{}, QTable(env), {}, 0};
  QTable& q = out.q;

  auto snapshot_steps = config.snapshot_at;
  std::sort(snapshot_steps.begin(), snapshot_steps.end());
  auto next_fixed = snapshot_steps.begin();

  std::size_t s = std::uniform_int_distribution<std::size_t>(0, env.num_states() - 1)(rng);
  for (std::uint64_t n = 1; n <= config.iterations; ++n) {
    const double step = static_cast<double>(n);
    const bool explore = unit(rng) <= config.epsilon0 / std::sqrt(step);
    const int a = explore ? std::uniform_int_distribution<int>(0, env.max_action(s))(rng) : q.greedy(s);
    if (explore) ++out.explorations;
    if (observer) observer(StepInfo{n, s, a, explore});

    const Transition t{env.sample_next(s, a, unit(rng)), -env.cost(s, a)};
    q_update(q, s, a, t.next, t.reward, 1.0 / std::sqrt(step + 2.0));
    s = t.next;

    while (next_fixed != snapshot_steps.end() && *next_fixed < n) ++next_fixed;
    const bool fixed = next_fixed != snapshot_steps.end() && *next_fixed == n;
    const bool periodic = config.snapshot_every > 0 && n % config.snapshot_every == 0;
    if (fixed || periodic) out.snapshots.push_back(Snapshot{n, q.greedy_policy()});
  }
  out.policy = q.greedy_policy();
  return out;
}

}  // namespace batchq
