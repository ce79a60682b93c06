#include "batchq/batchq.h"

#include <algorithm>
#include <exception>
#include <fstream>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "batchq/discretizer.hpp"
#include "batchq/error.hpp"
#include "batchq/policy.hpp"
#include "batchq/profile.hpp"
#include "batchq/qlearn.hpp"
#include "batchq/simulator.hpp"
#include "batchq/smdp.hpp"
#include "batchq/solver.hpp"

struct bq_profile {
  batchq::ServiceProfile value;
};

struct bq_model {
  std::shared_ptr<const batchq::FiniteSmdp> value;
};

struct bq_policy {
  batchq::Policy value;
};

namespace {

thread_local std::string last_error;

struct ArgError {
  std::string what;
};

bq_status status_of(batchq::ErrorKind kind) {
  using batchq::ErrorKind;
  switch (kind) {
    case ErrorKind::domain: return BQ_ERR_DOMAIN;
    case ErrorKind::config: return BQ_ERR_CONFIG;
    case ErrorKind::stability: return BQ_ERR_STABILITY;
    case ErrorKind::fit: return BQ_ERR_FIT;
    case ErrorKind::model_violation: return BQ_ERR_MODEL_VIOLATION;
    case ErrorKind::structure: return BQ_ERR_STRUCTURE;
    case ErrorKind::exhausted: return BQ_ERR_EXHAUSTED;
    case ErrorKind::io: return BQ_ERR_IO;
    case ErrorKind::instability: return BQ_ERR_INSTABILITY;
  }
  return BQ_ERR_INTERNAL;
}

// Runs fn, translating exceptions into status codes.
template <class Fn>
bq_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return BQ_OK;
  } catch (const ArgError& e) {
    last_error = e.what;
    return BQ_ERR_INVALID_ARGUMENT;
  } catch (const batchq::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return BQ_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return BQ_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown exception";
    return BQ_ERR_INTERNAL;
  }
}

void require(const void* p, const char* name) {
  if (p == nullptr) throw ArgError{std::string(name) + " must not be null"};
}

batchq::SolveOptions solve_options(const bq_solve_options* o) {
  batchq::SolveOptions s;
  if (o != nullptr) {
    s.epsilon = o->epsilon;
    s.iter_max = o->iter_max;
    if (o->ref_state < 0) throw batchq::Error(batchq::ErrorKind::config, "ref_state must be >= 0");
    s.ref_state = static_cast<std::size_t>(o->ref_state);
  }
  if (!(s.epsilon > 0.0)) throw batchq::Error(batchq::ErrorKind::config, "epsilon must be > 0");
  if (s.iter_max < 1) throw batchq::Error(batchq::ErrorKind::config, "iter_max must be >= 1");
  return s;
}

double eta_fraction_of(const bq_solve_options* o) { return o != nullptr ? o->eta_fraction : 0.99; }

batchq::SimOptions sim_options(const bq_sim_options* o) {
  batchq::SimOptions s;
  if (o != nullptr) {
    s.horizon = o->horizon;
    s.seed = o->seed;
    s.warmup_fraction = o->warmup_fraction;
    s.max_queue = o->max_queue;
  }
  return s;
}

void fill(bq_sim_report* out, const batchq::SimReport& r) {
  out->avg_queue_len = r.avg_queue_len;
  out->avg_response_time = r.avg_response_time;
  out->avg_power = r.avg_power;
  out->energy_per_task = r.energy_per_task;
  out->throughput = r.throughput;
  out->arrival_rate = r.arrival_rate;
  out->n_arrivals = r.n_arrivals;
  out->n_served = r.n_served;
  out->queue_at_horizon = r.queue_at_horizon;
  out->in_service_at_horizon = r.in_service_at_horizon;
  out->horizon = r.horizon;
  out->window = r.window;
  out->seed = r.seed;
}

bq_line_fit to_c(const batchq::LinearFit& f) {
  return bq_line_fit{f.slope, f.intercept, f.rmse, f.intercept_clamped ? 1 : 0};
}

}  // namespace

extern "C" {

const char* bq_version(void) { return "1.0.0"; }

const char* bq_status_name(bq_status status) {
  switch (status) {
    case BQ_OK: return "ok";
    case BQ_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case BQ_ERR_DOMAIN: return "domain";
    case BQ_ERR_CONFIG: return "config";
    case BQ_ERR_STABILITY: return "stability";
    case BQ_ERR_FIT: return "fit";
    case BQ_ERR_MODEL_VIOLATION: return "model_violation";
    case BQ_ERR_STRUCTURE: return "structure";
    case BQ_ERR_EXHAUSTED: return "exhausted";
    case BQ_ERR_IO: return "io";
    case BQ_ERR_INSTABILITY: return "instability";
    case BQ_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* bq_last_error(void) { return last_error.c_str(); }

// ---- profile ---------------------------------------------------------------

bq_status bq_profile_create(const bq_profile_params* params, bq_profile** out) {
  return guarded([&] {
    require(params, "params");
    require(out, "out");
    *out = new bq_profile{batchq::ServiceProfile(params->alpha, params->tau0, params->beta,
                                                    params->zeta0, params->b_max)};
  });
}

bq_status bq_profile_load(const char* path, bq_profile** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new bq_profile{batchq::load_profile(path)};
  });
}

bq_status bq_profile_save(const bq_profile* profile, const char* path) {
  return guarded([&] {
    require(profile, "profile");
    require(path, "path");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw batchq::Error(batchq::ErrorKind::io, std::string("cannot write ") + path);
    f << batchq::profile_to_json(profile->value) << '\n';
    if (!f) throw batchq::Error(batchq::ErrorKind::io, std::string("write failed: ") + path);
  });
}

bq_status bq_profile_fit(const int* batches, const double* latency, const double* energy, size_t n,
                         int b_max, bq_profile** out, bq_line_fit* latency_fit, bq_line_fit* energy_fit) {
  return guarded([&] {
    require(batches, "batches");
    require(latency, "latency");
    require(energy, "energy");
    require(out, "out");
    std::vector<batchq::Sample> lat(n), en(n);
    for (size_t i = 0; i < n; ++i) {
      lat[i] = {static_cast<double>(batches[i]), latency[i]};
      en[i] = {static_cast<double>(batches[i]), energy[i]};
    }
    auto fit = batchq::fit_linear_profile(lat, en, b_max);
    if (latency_fit != nullptr) *latency_fit = to_c(fit.latency);
    if (energy_fit != nullptr) *energy_fit = to_c(fit.energy);
    *out = new bq_profile{fit.profile};
  });
}

bq_status bq_profile_get_params(const bq_profile* profile, bq_profile_params* out) {
  return guarded([&] {
    require(profile, "profile");
    require(out, "out");
    const auto& p = profile->value;
    *out = bq_profile_params{p.alpha(), p.tau0(), p.beta(), p.zeta0(), p.b_max()};
  });
}

bq_status bq_profile_metrics(const bq_profile* profile, int b, bq_batch_metrics* out) {
  return guarded([&] {
    require(profile, "profile");
    require(out, "out");
    const auto m = batchq::profile_metrics(profile->value, b);
    *out = bq_batch_metrics{m.latency, m.energy, m.throughput};
  });
}

bq_status bq_profile_lambda_for_rho(const bq_profile* profile, double rho, double* lambda) {
  return guarded([&] {
    require(profile, "profile");
    require(lambda, "lambda");
    *lambda = batchq::Workload::from_rho(profile->value, rho).lambda;
  });
}

void bq_profile_free(bq_profile* profile) { delete profile; }

// ---- model -------------------------------------------------------------------

bq_status bq_model_build(const bq_profile* profile, const bq_model_params* params, bq_model** out) {
  return guarded([&] {
    require(profile, "profile");
    require(params, "params");
    require(out, "out");
    auto model = std::make_shared<const batchq::FiniteSmdp>(batchq::FiniteSmdp::build(
        profile->value, batchq::Workload::make(params->lambda), batchq::Weights::make(params->w1, params->w2),
        batchq::TruncationConfig{params->s_max, params->c_o}));
    *out = new bq_model{std::move(model)};
  });
}

size_t bq_model_num_states(const bq_model* model) { return model ? model->value->num_states() : 0; }

int bq_model_max_action(const bq_model* model, size_t state) {
  if (model == nullptr || state >= model->value->num_states()) return -1;
  return model->value->max_action(state);
}

bq_status bq_model_pair(const bq_model* model, size_t state, int action, bq_pair_info* out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    const auto& m = *model->value;
    if (state >= m.num_states() || action < 0 || action > m.max_action(state))
      throw batchq::Error(batchq::ErrorKind::domain, "pair (" + std::to_string(state) + ", " +
                                                         std::to_string(action) + ") is not feasible");
    *out = bq_pair_info{m.sojourn(action), m.cost(state, action), m.overflow_mass(state, action)};
  });
}

void bq_model_free(bq_model* model) { delete model; }

// ---- policies ------------------------------------------------------------------

bq_status bq_policy_work_conserving(int b_max, int s_max, bq_policy** out) {
  return guarded([&] {
    require(out, "out");
    *out = new bq_policy{batchq::make_work_conserving(b_max, s_max)};
  });
}

bq_status bq_policy_static(int b, int b_max, int s_max, bq_policy** out) {
  return guarded([&] {
    require(out, "out");
    *out = new bq_policy{batchq::make_static(b, b_max, s_max)};
  });
}

bq_status bq_policy_control_limit(int limit, int b_max, int s_max, bq_policy** out) {
  return guarded([&] {
    require(out, "out");
    *out = new bq_policy{batchq::make_control_limit(limit, b_max, s_max)};
  });
}

bq_status bq_policy_from_actions(int b_max, const int* actions, size_t n, bq_policy** out) {
  return guarded([&] {
    require(actions, "actions");
    require(out, "out");
    batchq::Policy p{b_max, std::vector<int>(actions, actions + n)};
    batchq::validate_policy(p);
    *out = new bq_policy{std::move(p)};
  });
}

bq_status bq_policy_load(const char* path, int b_max, bq_policy** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new bq_policy{batchq::load_policy(path, b_max)};
  });
}

bq_status bq_policy_load_chart(const char* path, int b_max, double rho, double w1, double w2,
                               bq_policy** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new bq_policy{batchq::load_policy_chart(path, batchq::ChartKey{rho, w1, w2}, b_max)};
  });
}

bq_status bq_policy_save(const bq_policy* policy, const char* path) {
  return guarded([&] {
    require(policy, "policy");
    require(path, "path");
    batchq::save_policy(path, policy->value);
  });
}

size_t bq_policy_size(const bq_policy* policy) { return policy ? policy->value.size() : 0; }

int bq_policy_b_max(const bq_policy* policy) { return policy ? policy->value.b_max : 0; }

bq_status bq_policy_get_actions(const bq_policy* policy, int* actions, size_t capacity) {
  return guarded([&] {
    require(policy, "policy");
    require(actions, "actions");
    if (capacity < policy->value.size())
      throw ArgError{"actions buffer holds " + std::to_string(capacity) + " entries, need " +
                     std::to_string(policy->value.size())};
    std::copy(policy->value.actions.begin(), policy->value.actions.end(), actions);
  });
}

bq_status bq_policy_detect_control_limit(const bq_policy* policy, int* limit, int* found) {
  return guarded([&] {
    require(policy, "policy");
    require(found, "found");
    const auto l = batchq::detect_control_limit(policy->value);
    *found = l ? 1 : 0;
    if (limit != nullptr) *limit = l.value_or(-1);
  });
}

bq_status bq_policy_agreement(const bq_policy* a, const bq_policy* b, const double* mass, size_t mass_len,
                              double* out) {
  return guarded([&] {
    require(a, "a");
    require(b, "b");
    require(out, "out");
    if (mass != nullptr) {
      const std::vector<double> m(mass, mass + mass_len);
      *out = batchq::policy_agreement(a->value, b->value, &m);
    } else {
      *out = batchq::policy_agreement(a->value, b->value);
    }
  });
}

void bq_policy_free(bq_policy* policy) { delete policy; }

// ---- solver ----------------------------------------------------------------------

void bq_solve_options_default(bq_solve_options* options) {
  if (options == nullptr) return;
  const batchq::SolveOptions d;
  *options = bq_solve_options{d.epsilon, d.iter_max, static_cast<int>(d.ref_state), 0.99};
}

bq_status bq_solve(const bq_model* model, const bq_solve_options* options, bq_policy** policy,
                   bq_solve_report* report, double* h, size_t h_len) {
  return guarded([&] {
    require(model, "model");
    require(policy, "policy");
    const auto opts = solve_options(options);
    const auto dt = batchq::to_dtmdp(model->value, eta_fraction_of(options));
    if (h != nullptr && h_len < dt.num_states()) throw ArgError{"h buffer too short"};
    auto result = batchq::relative_value_iteration(dt, opts);
    if (report != nullptr) {
      const auto& r = result.report;
      *report = bq_solve_report{r.g, r.iterations, r.final_span, r.converged ? 1 : 0, dt.eta(),
                                r.multiplications_per_iteration};
    }
    if (h != nullptr) std::copy(result.report.h.begin(), result.report.h.end(), h);
    *policy = new bq_policy{std::move(result.policy)};
  });
}

bq_status bq_evaluate(const bq_policy* policy, const bq_model* model, double delta, bq_eval_report* report,
                      double* mu, size_t mu_len) {
  return guarded([&] {
    require(policy, "policy");
    require(model, "model");
    require(report, "report");
    if (mu != nullptr && mu_len < model->value->num_states()) throw ArgError{"mu buffer too short"};
    const auto e = batchq::evaluate_policy(policy->value, *model->value, delta);
    *report = bq_eval_report{e.g_pi,          e.delta_pi,          e.acceptable ? 1 : 0,
                             e.mean_sojourn,  e.avg_queue_len,     e.avg_response_time,
                             e.avg_power,     e.energy_efficiency};
    if (mu != nullptr) std::copy(e.mu.begin(), e.mu.end(), mu);
  });
}

bq_status bq_find_min_smax(const bq_profile* profile, double lambda, double w1, double w2,
                           const bq_smax_options* options, int* s_max_out, bq_smax_record* records,
                           size_t capacity, size_t* count) {
  std::vector<batchq::SmaxRecord> recs;
  int found = 0;
  const bq_status st = guarded([&] {
    require(profile, "profile");
    require(options, "options");
    if (options->grid_len > 0) require(options->grid, "options->grid");
    batchq::SmaxSearchOptions o;
    o.c_o = options->c_o;
    o.delta = options->delta;
    o.solve = solve_options(&options->solve);
    o.eta_fraction = options->solve.eta_fraction;
    o.grid.assign(options->grid, options->grid + options->grid_len);
    o.stop_at_first = options->stop_at_first != 0;
    o.jobs = std::max(1u, options->jobs);
    try {
      auto result = batchq::find_min_smax(profile->value, batchq::Workload::make(lambda),
                                          batchq::Weights::make(w1, w2), o);
      found = result.s_max;
      recs = std::move(result.records);
    } catch (const batchq::SearchExhausted& e) {
      recs = e.records();
      throw;
    }
  });
  if (s_max_out != nullptr) *s_max_out = found;
  if (count != nullptr) *count = recs.size();
  if (records != nullptr) {
    for (std::size_t i = 0; i < std::min(capacity, recs.size()); ++i) {
      const auto& r = recs[i];
      records[i] = bq_smax_record{r.s_max,          r.g_pi,           r.delta_pi,
                                  r.iterations,     r.converged,      r.space_complexity,
                                  r.time_complexity, r.acceptable,    r.control_limit.value_or(-1)};
    }
  }
  return st;
}

// ---- Q-learning -------------------------------------------------------------------

void bq_qlearn_config_default(bq_qlearn_config* config) {
  if (config == nullptr) return;
  const batchq::QLearnConfig d;
  *config = bq_qlearn_config{d.epsilon0, d.iterations, d.seed, d.snapshot_every, nullptr, 0, 0.99};
}

bq_status bq_qlearn_train(const bq_model* model, const bq_qlearn_config* config, bq_snapshot_fn on_snapshot,
                          void* user, bq_policy** out) {
  return guarded([&] {
    require(model, "model");
    require(config, "config");
    require(out, "out");
    if (config->snapshot_at_len > 0) require(config->snapshot_at, "config->snapshot_at");
    batchq::QLearnConfig c;
    c.epsilon0 = config->epsilon0;
    c.iterations = config->iterations;
    c.seed = config->seed;
    c.snapshot_every = config->snapshot_every;
    c.snapshot_at.assign(config->snapshot_at, config->snapshot_at + config->snapshot_at_len);
    const auto dt = batchq::to_dtmdp(model->value, config->eta_fraction);
    auto result = batchq::train(dt, c);
    if (on_snapshot != nullptr)
      for (const auto& s : result.snapshots)
        on_snapshot(user, s.iteration, s.policy.actions.data(), s.policy.actions.size());
    *out = new bq_policy{std::move(result.policy)};
  });
}

// ---- simulation -----------------------------------------------------------------------

void bq_sim_options_default(bq_sim_options* options) {
  if (options == nullptr) return;
  const batchq::SimOptions d;
  *options = bq_sim_options{d.horizon, d.seed, d.warmup_fraction, d.max_queue};
}

bq_status bq_simulate(const bq_profile* profile, double lambda, const bq_policy* policy,
                      const bq_sim_options* options, bq_sim_report* report, int64_t* histogram,
                      size_t histogram_len) {
  return guarded([&] {
    require(profile, "profile");
    require(policy, "policy");
    require(report, "report");
    const auto r = batchq::simulate(profile->value, batchq::Workload::make(lambda), policy->value,
                                    sim_options(options));
    if (histogram != nullptr) {
      if (histogram_len < r.batch_histogram.size()) throw ArgError{"histogram buffer too short"};
      std::copy(r.batch_histogram.begin(), r.batch_histogram.end(), histogram);
    }
    fill(report, r);
  });
}

bq_status bq_replicate(const bq_profile* profile, double lambda, const bq_policy* policy, double w1,
                       double w2, const bq_sim_options* options, int replications, unsigned jobs,
                       double* mean_cost, double* stderr_cost, bq_sim_report* reports, int64_t* histogram,
                       size_t histogram_len) {
  return guarded([&] {
    require(profile, "profile");
    require(policy, "policy");
    const auto sum = batchq::replicate(profile->value, batchq::Workload::make(lambda), policy->value,
                                       batchq::Weights::make(w1, w2), sim_options(options), replications,
                                       std::max(1u, jobs));
    if (mean_cost != nullptr) *mean_cost = sum.mean_cost;
    if (stderr_cost != nullptr) *stderr_cost = sum.stderr_cost;
    if (reports != nullptr)
      for (std::size_t i = 0; i < sum.reports.size(); ++i) fill(&reports[i], sum.reports[i]);
    if (histogram != nullptr) {
      const std::size_t len = static_cast<std::size_t>(profile->value.b_max()) + 1;
      if (histogram_len < len) throw ArgError{"histogram buffer too short"};
      std::fill(histogram, histogram + len, 0);
      for (const auto& r : sum.reports)
        for (std::size_t b = 0; b < len; ++b) histogram[b] += r.batch_histogram[b];
    }
  });
}

double bq_weighted_cost(const bq_sim_report* report, double w1, double w2, double lambda) {
  if (report == nullptr || !(lambda > 0.0)) return 0.0;
  return w1 / lambda * report->avg_queue_len + w2 * report->avg_power;
}

}  // extern "C"
