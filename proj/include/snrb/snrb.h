/* C interface to the snrbound library.
 *
 * Every fallible call returns an snrb_status; on failure a description is
 * available from snrb_last_error() on the calling thread until the next
 * failing call. Objects are opaque handles released with the matching
 * *_free function. Strings returned through char** are owned by the caller
 * and released with snrb_string_free.
 */
#ifndef SNRB_SNRB_H
#define SNRB_SNRB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(SNRB_BUILDING_LIBRARY)
#define SNRB_API __declspec(dllexport)
#else
#define SNRB_API __declspec(dllimport)
#endif
#else
#define SNRB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum snrb_status {
  SNRB_OK = 0,
  SNRB_ERR_INPUT = 1,
  SNRB_ERR_DEGENERATE = 2,
  SNRB_ERR_INFEASIBLE = 3,
  SNRB_ERR_SINGULAR = 4,
  SNRB_ERR_PARSE = 5,
  SNRB_ERR_IO = 6,
  SNRB_ERR_DIVERGENCE = 7,
  SNRB_ERR_GENERATION = 8,
  SNRB_ERR_UNKNOWN_KEY = 9,
  SNRB_ERR_INTERNAL = 10
} snrb_status;

SNRB_API const char* snrb_version(void);
SNRB_API const char* snrb_last_error(void);
SNRB_API const char* snrb_status_name(snrb_status status);
SNRB_API void snrb_string_free(char* s);

/* ---- moment bounds ---------------------------------------------------- */

SNRB_API snrb_status snrb_upper_tail_bound(double mu, double var, double eta, double* out);
SNRB_API snrb_status snrb_cdf_envelope(double mu, double var, double eta, double* lower, double* upper);
SNRB_API snrb_status snrb_outside_interval_upper_bound(double mu, double var, double lo, double hi, double* out);
SNRB_API snrb_status snrb_outside_interval_sharp_bound(double mu, double var, double lo, double hi, double* out);
SNRB_API snrb_status snrb_inside_interval_upper_bound(double mu, double var, double lo, double hi, double* out);
SNRB_API snrb_status snrb_inside_interval_lower_bound(double mu, double var, double lo, double hi, double* out);
SNRB_API snrb_status snrb_tp_bound_from_snr(double s, double* out);

/* ---- discrete laws and the grid oracle -------------------------------- */

typedef struct snrb_dist snrb_dist;

/* Closed events: tail is x >= t1; outside is x <= t1 or x >= t2; inside is t1 <= x <= t2. */
typedef enum snrb_event_kind { SNRB_EVENT_TAIL = 0, SNRB_EVENT_OUTSIDE = 1, SNRB_EVENT_INSIDE = 2 } snrb_event_kind;

SNRB_API snrb_status snrb_dist_create(const double* x, const double* p, size_t n, snrb_dist** out);
SNRB_API void snrb_dist_free(snrb_dist* d);
SNRB_API size_t snrb_dist_size(const snrb_dist* d);
SNRB_API snrb_status snrb_dist_atom(const snrb_dist* d, size_t index, double* x, double* p);
SNRB_API snrb_status snrb_dist_moments(const snrb_dist* d, double* mu, double* var);
SNRB_API snrb_status snrb_dist_event_prob(const snrb_dist* d, snrb_event_kind kind, double t1, double t2, double* out);

SNRB_API snrb_status snrb_construct_tail_extremal(double mu, double var, double eta, snrb_dist** out);
SNRB_API snrb_status snrb_construct_spike(double mu, double var, double eps, snrb_dist** out);
SNRB_API snrb_status snrb_construct_outside_extremal(double mu, double var, double lo, double hi, snrb_dist** out);

/* Grid [mu - 6 sigma, mu + 6 sigma]; step <= 0 selects sigma / 100. witness may be NULL. */
SNRB_API snrb_status snrb_oracle_max_event(double mu, double var, snrb_event_kind kind, double t1, double t2,
                                           double step, double* sup_prob, snrb_dist** witness);

/* ---- experiment configuration ---------------------------------------- */

typedef struct snrb_config snrb_config;

SNRB_API snrb_status snrb_config_create(snrb_config** out);
SNRB_API void snrb_config_free(snrb_config* cfg);
SNRB_API snrb_status snrb_config_set(snrb_config* cfg, const char* key, const char* value);
/* The returned pointer stays valid until the key is set again or cfg is freed. */
SNRB_API snrb_status snrb_config_get(const snrb_config* cfg, const char* key, const char** value);
SNRB_API snrb_status snrb_config_load_file(snrb_config* cfg, const char* path);
SNRB_API size_t snrb_config_key_count(void);
SNRB_API snrb_status snrb_config_key_info(size_t index, const char** name, const char** default_value,
                                          const char** doc);

/* ---- parametric simulation ------------------------------------------- */

typedef struct snrb_sim_result {
  double acc_snr;
  double acc_ml;
  double tau_snr;
  double tau_ml;
  uint64_t n_trials;
  uint64_t seed;
  uint64_t discordant;
} snrb_sim_result;

SNRB_API snrb_status snrb_parametric_sim(const snrb_config* cfg, snrb_sim_result* out);
SNRB_API snrb_status snrb_sim_result_json(const snrb_sim_result* result, char** out);

/* ---- training ---------------------------------------------------------- */

typedef struct snrb_run snrb_run;

typedef struct snrb_epoch_record {
  int32_t epoch;
  double train_loss_ce;
  double train_loss_snr;
  double val_accuracy;
} snrb_epoch_record;

typedef void (*snrb_epoch_callback)(const snrb_epoch_record* record, void* user);

SNRB_API snrb_status snrb_train(const snrb_config* cfg, snrb_epoch_callback on_epoch, void* user, snrb_run** out);
SNRB_API void snrb_run_free(snrb_run* run);
SNRB_API size_t snrb_run_epochs(const snrb_run* run);
SNRB_API snrb_status snrb_run_record(const snrb_run* run, size_t index, snrb_epoch_record* out);
/* Copies up to cap thresholds of epoch `index`; *count receives the full length. */
SNRB_API snrb_status snrb_run_eta(const snrb_run* run, size_t index, double* buf, size_t cap, size_t* count);
SNRB_API snrb_status snrb_run_csv(const snrb_run* run, char** out);
SNRB_API snrb_status snrb_run_summary_json(const snrb_run* run, char** out);

#ifdef __cplusplus
}
#endif

#endif /* SNRB_SNRB_H */
