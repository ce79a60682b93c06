#ifndef BATCHQ_BATCHQ_H
#define BATCHQ_BATCHQ_H

/* C interface to the batchq library. Objects are opaque handles released with
 * the matching *_free function. Every fallible call returns a bq_status; on
 * failure bq_last_error() describes the problem for the calling thread. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(BQ_BUILDING_LIBRARY)
#    define BQ_API __declspec(dllexport)
#  else
#    define BQ_API __declspec(dllimport)
#  endif
#else
#  define BQ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bq_status {
  BQ_OK = 0,
  BQ_ERR_INVALID_ARGUMENT = 1, /* null pointer, short buffer */
  BQ_ERR_DOMAIN = 2,
  BQ_ERR_CONFIG = 3,
  BQ_ERR_STABILITY = 4,        /* rho >= 1 */
  BQ_ERR_FIT = 5,
  BQ_ERR_MODEL_VIOLATION = 6,
  BQ_ERR_STRUCTURE = 7,        /* chain with several closed classes */
  BQ_ERR_EXHAUSTED = 8,        /* s_max grid ran out */
  BQ_ERR_IO = 9,
  BQ_ERR_INSTABILITY = 10,     /* simulated queue blew up */
  BQ_ERR_INTERNAL = 11
} bq_status;

BQ_API const char* bq_version(void);
BQ_API const char* bq_status_name(bq_status status);
/* Message of the last failed call on this thread; "" after a success. */
BQ_API const char* bq_last_error(void);

/* ---- profile ---------------------------------------------------------- */

typedef struct bq_profile bq_profile;

typedef struct bq_profile_params {
  double alpha; /* ms per request */
  double tau0;  /* ms */
  double beta;  /* mJ per request */
  double zeta0; /* mJ */
  int b_max;
} bq_profile_params;

typedef struct bq_batch_metrics {
  double latency;    /* tau(b), ms */
  double energy;     /* zeta(b), mJ */
  double throughput; /* b / tau(b), requests/ms */
} bq_batch_metrics;

typedef struct bq_line_fit {
  double slope;
  double intercept;
  double rmse;
  int intercept_clamped; /* negative intercept replaced by 0 */
} bq_line_fit;

BQ_API bq_status bq_profile_create(const bq_profile_params* params, bq_profile** out);
/* JSON profile file with ms/mJ units. */
BQ_API bq_status bq_profile_load(const char* path, bq_profile** out);
BQ_API bq_status bq_profile_save(const bq_profile* profile, const char* path);
/* Least-squares fit of latency and energy against batch size. */
BQ_API bq_status bq_profile_fit(const int* batches, const double* latency, const double* energy, size_t n,
                                int b_max, bq_profile** out, bq_line_fit* latency_fit,
                                bq_line_fit* energy_fit);
BQ_API bq_status bq_profile_get_params(const bq_profile* profile, bq_profile_params* out);
BQ_API bq_status bq_profile_metrics(const bq_profile* profile, int b, bq_batch_metrics* out);
/* lambda = rho * mu(b_max). */
BQ_API bq_status bq_profile_lambda_for_rho(const bq_profile* profile, double rho, double* lambda);
BQ_API void bq_profile_free(bq_profile* profile);

/* ---- truncated semi-Markov model --------------------------------------- */

typedef struct bq_model bq_model;

typedef struct bq_model_params {
  double lambda; /* requests/ms */
  double w1;     /* latency weight */
  double w2;     /* energy weight */
  int s_max;     /* >= b_max */
  double c_o;    /* overflow cost rate, >= 0 */
} bq_model_params;

BQ_API bq_status bq_model_build(const bq_profile* profile, const bq_model_params* params, bq_model** out);
/* States 0..s_max plus the overflow state at index s_max + 1. */
BQ_API size_t bq_model_num_states(const bq_model* model);
BQ_API int bq_model_max_action(const bq_model* model, size_t state);

typedef struct bq_pair_info {
  double sojourn;       /* y(s, a), ms */
  double cost;          /* expected cost until the next epoch */
  double overflow_mass; /* probability of landing in the overflow state */
} bq_pair_info;

BQ_API bq_status bq_model_pair(const bq_model* model, size_t state, int action, bq_pair_info* out);
BQ_API void bq_model_free(bq_model* model);

/* ---- policies ---------------------------------------------------------- */

typedef struct bq_policy bq_policy;

BQ_API bq_status bq_policy_work_conserving(int b_max, int s_max, bq_policy** out);
BQ_API bq_status bq_policy_static(int b, int b_max, int s_max, bq_policy** out);
BQ_API bq_status bq_policy_control_limit(int limit, int b_max, int s_max, bq_policy** out);
/* actions[0..n-1] cover 0..s_max and the overflow state last. */
BQ_API bq_status bq_policy_from_actions(int b_max, const int* actions, size_t n, bq_policy** out);
BQ_API bq_status bq_policy_load(const char* path, int b_max, bq_policy** out);
/* Slice (rho, w1, w2) of a chart file with header rho,w1,w2,s,action. */
BQ_API bq_status bq_policy_load_chart(const char* path, int b_max, double rho, double w1, double w2,
                                      bq_policy** out);
BQ_API bq_status bq_policy_save(const bq_policy* policy, const char* path);
BQ_API size_t bq_policy_size(const bq_policy* policy);
BQ_API int bq_policy_b_max(const bq_policy* policy);
BQ_API bq_status bq_policy_get_actions(const bq_policy* policy, int* actions, size_t capacity);
/* *found = 0 when the policy has no control-limit shape. */
BQ_API bq_status bq_policy_detect_control_limit(const bq_policy* policy, int* limit, int* found);
/* Fraction of states with equal actions, weighted by mass when non-null. */
BQ_API bq_status bq_policy_agreement(const bq_policy* a, const bq_policy* b, const double* mass,
                                     size_t mass_len, double* out);
BQ_API void bq_policy_free(bq_policy* policy);

/* ---- relative value iteration ----------------------------------------- */

typedef struct bq_solve_options {
  double epsilon;      /* span stopping tolerance */
  int64_t iter_max;
  int ref_state;
  double eta_fraction; /* step size as a share of its upper bound, in (0, 1) */
} bq_solve_options;

typedef struct bq_solve_report {
  double g;
  int64_t iterations;
  double final_span;
  int converged;
  double eta;
  double multiplications_per_iteration;
} bq_solve_report;

BQ_API void bq_solve_options_default(bq_solve_options* options);
/* h (optional) receives the relative values, one per state, with h[ref_state] = 0. */
BQ_API bq_status bq_solve(const bq_model* model, const bq_solve_options* options, bq_policy** policy,
                          bq_solve_report* report, double* h, size_t h_len);

/* ---- policy evaluation -------------------------------------------------- */

typedef struct bq_eval_report {
  double g_pi;              /* long-run cost rate */
  double delta_pi;          /* cost-rate share of the overflow state */
  int acceptable;           /* delta_pi < delta */
  double mean_sojourn;      /* ms per decision epoch */
  double avg_queue_len;
  double avg_response_time; /* ms */
  double avg_power;         /* mJ/ms */
  double energy_efficiency; /* requests per mJ */
} bq_eval_report;

/* mu (optional) receives the stationary distribution of the embedded chain. */
BQ_API bq_status bq_evaluate(const bq_policy* policy, const bq_model* model, double delta,
                             bq_eval_report* report, double* mu, size_t mu_len);

/* ---- truncation search ---------------------------------------------------- */

typedef struct bq_smax_options {
  double c_o;
  double delta;
  bq_solve_options solve;
  const int* grid; /* increasing s_max candidates */
  size_t grid_len;
  int stop_at_first;
  unsigned jobs;
} bq_smax_options;

typedef struct bq_smax_record {
  int s_max;
  double g_pi;
  double delta_pi;
  int64_t iterations;
  int converged;
  double space_complexity;
  double time_complexity;
  int acceptable;
  int control_limit; /* -1 when absent */
} bq_smax_record;

/* Records are copied up to capacity; *count gets the total. On
 * BQ_ERR_EXHAUSTED the records are still filled and *s_max_out is 0. */
BQ_API bq_status bq_find_min_smax(const bq_profile* profile, double lambda, double w1, double w2,
                                  const bq_smax_options* options, int* s_max_out,
                                  bq_smax_record* records, size_t capacity, size_t* count);

/* ---- Q-learning ------------------------------------------------------------- */

typedef struct bq_qlearn_config {
  double epsilon0;
  uint64_t iterations;
  uint64_t seed;
  uint64_t snapshot_every; /* 0 disables periodic snapshots */
  const uint64_t* snapshot_at;
  size_t snapshot_at_len;
  double eta_fraction;
} bq_qlearn_config;

/* Called for every snapshot; actions has one entry per state. */
typedef void (*bq_snapshot_fn)(void* user, uint64_t iteration, const int* actions, size_t n);

BQ_API void bq_qlearn_config_default(bq_qlearn_config* config);
BQ_API bq_status bq_qlearn_train(const bq_model* model, const bq_qlearn_config* config,
                                 bq_snapshot_fn on_snapshot, void* user, bq_policy** out);

/* ---- simulation ------------------------------------------------------------ */

typedef struct bq_sim_options {
  double horizon; /* ms */
  uint64_t seed;
  double warmup_fraction;
  int64_t max_queue;
} bq_sim_options;

typedef struct bq_sim_report {
  double avg_queue_len;
  double avg_response_time;
  double avg_power;
  double energy_per_task;
  double throughput;
  double arrival_rate;
  int64_t n_arrivals;
  int64_t n_served;
  int64_t queue_at_horizon;
  int64_t in_service_at_horizon;
  double horizon;
  double window;
  uint64_t seed;
} bq_sim_report;

BQ_API void bq_sim_options_default(bq_sim_options* options);
/* histogram (optional) receives b_max + 1 batch-size counts. */
BQ_API bq_status bq_simulate(const bq_profile* profile, double lambda, const bq_policy* policy,
                             const bq_sim_options* options, bq_sim_report* report, int64_t* histogram,
                             size_t histogram_len);
/* Replications use seeds seed, seed+1, ...; reports (optional) holds one per
 * run and histogram (optional) the batch-size counts summed over runs. */
BQ_API bq_status bq_replicate(const bq_profile* profile, double lambda, const bq_policy* policy,
                              double w1, double w2, const bq_sim_options* options, int replications,
                              unsigned jobs, double* mean_cost, double* stderr_cost,
                              bq_sim_report* reports, int64_t* histogram, size_t histogram_len);
BQ_API double bq_weighted_cost(const bq_sim_report* report, double w1, double w2, double lambda);

#ifdef __cplusplus
}
#endif

#endif
