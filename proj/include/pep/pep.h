/*
 * Copyright 2026 The pep Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

/* C interface to the perception-and-energy-aware planner.
 *
 * Every function returns a pep_status. On failure the message of the most
 * recent error on the calling thread is available from pep_last_error()
 * and, for validation errors, the offending field from
 * pep_last_error_field(). Objects are opaque and owned by the caller, who
 * releases them with the matching *_free function (NULL is accepted).
 */

#ifndef PEP_PEP_H_
#define PEP_PEP_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(PEP_BUILDING_LIBRARY)
#define PEP_API __declspec(dllexport)
#else
#define PEP_API __declspec(dllimport)
#endif
#else
#define PEP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pep_status {
  PEP_OK = 0,
  PEP_ERR_INVALID_ARGUMENT = 1, /* NULL pointer, bad enum, bad buffer */
  PEP_ERR_PARSE = 2,            /* malformed file contents */
  PEP_ERR_VALIDATION = 3,       /* domain invariant violated */
  PEP_ERR_FIT = 4,              /* model fitting preconditions */
  PEP_ERR_PLANNING = 5,         /* planner failure other than unreachability */
  PEP_ERR_GOAL_UNREACHABLE = 6,
  PEP_ERR_IO = 7,
  PEP_ERR_INTERNAL = 8
} pep_status;

typedef enum pep_data_kind { PEP_DATA_UNCERTAINTY = 0, PEP_DATA_POWER = 1 } pep_data_kind;

typedef struct pep_scenario pep_scenario;
typedef struct pep_models pep_models;
typedef struct pep_trajectory pep_trajectory;

typedef struct pep_state {
  double x;
  double y;
  double v;
  double t;
} pep_state;

typedef struct pep_summary {
  double total_energy_j;
  double total_perception;
  double duration_s;
  int n_samples_used;
  int n_segments;
  size_t n_states;
} pep_summary;

PEP_API const char* pep_version(void);
PEP_API const char* pep_status_name(pep_status status);
PEP_API const char* pep_last_error(void);
PEP_API const char* pep_last_error_field(void);

/* Receives one progress line per 1000 planner samples. NULL disables. */
typedef void (*pep_log_fn)(const char* line, void* user);
PEP_API void pep_set_log_callback(pep_log_fn fn, void* user);

/* "direct", "proposed", "hpq" or a non-negative number. */
PEP_API pep_status pep_parse_alpha(const char* text, double* alpha_p);

/* Scenarios ---------------------------------------------------------------- */

/* Bundled name (scenario1, scenario2, validation) or path to a JSON file. */
PEP_API pep_status pep_scenario_open(const char* name_or_path, pep_scenario** out);
PEP_API pep_status pep_scenario_parse(const char* json_text, pep_scenario** out);
PEP_API pep_status pep_scenario_save(const pep_scenario* scenario, const char* path);
PEP_API pep_status pep_scenario_set_alpha_p(pep_scenario* scenario, double alpha_p);
PEP_API pep_status pep_scenario_set_seed(pep_scenario* scenario, uint64_t seed);
PEP_API pep_status pep_scenario_set_max_samples(pep_scenario* scenario, int max_samples);
PEP_API pep_status pep_scenario_name(const pep_scenario* scenario, const char** name);
PEP_API void pep_scenario_free(pep_scenario* scenario);

/* Models ------------------------------------------------------------------- */

#define PEP_DEFAULT_UNCERTAINTY_SEED 7
#define PEP_DEFAULT_POWER_SEED 8

/* Models fitted to freshly generated reference datasets. */
PEP_API pep_status pep_models_reference(uint64_t uncertainty_seed, uint64_t power_seed, pep_models** out);
/* Up to two model files, recognised by their "format" field. A kind that
 * is not supplied falls back to the reference model. */
PEP_API pep_status pep_models_load(const char* const* paths, size_t n_paths, pep_models** out);
PEP_API pep_status pep_models_sensor_noise(const pep_models* models, double v, double d, double* mu,
                                           double* sigma);
PEP_API pep_status pep_models_segment_energy(const pep_models* models, double v_cur, double v_tmp, double d,
                                             double a_max, double p_max, double* c_e, double* energy_j);
PEP_API void pep_models_free(pep_models* models);

/* Datasets and fitting ----------------------------------------------------- */

/* n_per_speed <= 0 selects the default for the kind. */
PEP_API pep_status pep_generate_data(pep_data_kind kind, const char* out_path, uint64_t seed, int n_per_speed);
/* Fits the dataset and writes the model JSON. For uncertainty data the
 * held-out coverage is stored in *coverage when it is non-NULL. */
PEP_API pep_status pep_fit(pep_data_kind kind, const char* data_path, const char* out_path, double* coverage);

/* Planning ----------------------------------------------------------------- */

PEP_API pep_status pep_plan(const pep_scenario* scenario, const pep_models* models, pep_trajectory** out);
PEP_API pep_status pep_trajectory_summary(const pep_trajectory* trajectory, pep_summary* out);
/* Copies up to `capacity` states; *n_states receives the total count. */
PEP_API pep_status pep_trajectory_states(const pep_trajectory* trajectory, pep_state* buffer, size_t capacity,
                                         size_t* n_states);
/* Writes trajectory.csv, summary.json and fim_metric.csv into out_dir.
 * A NULL timestamp uses the current UTC time. */
PEP_API pep_status pep_trajectory_write(const pep_trajectory* trajectory, const char* out_dir,
                                        const char* timestamp);
PEP_API void pep_trajectory_free(pep_trajectory* trajectory);

/* Experiments -------------------------------------------------------------- */

/* Plans every (scenario, alpha, seed) combination and writes compare.md and
 * compare.csv into out_dir. Seeds are first_seed .. first_seed+n_seeds-1. */
PEP_API pep_status pep_compare(const pep_scenario* const* scenarios, size_t n_scenarios, const double* alphas,
                               size_t n_alphas, int n_seeds, uint64_t first_seed, const pep_models* models,
                               const char* out_dir);

typedef struct pep_replan_options {
  double horizon;      /* metres flown per plan */
  double k_drift;      /* drift per metre is k_drift / max(s, epsilon_fim) */
  double drift_limit;  /* metres */
  int max_replans;
} pep_replan_options;

PEP_API pep_replan_options pep_replan_defaults(void);

/* Receding-horizon runs; writes replan_summary.csv and drift_trace.csv
 * into out_dir. */
PEP_API pep_status pep_replan(const pep_scenario* scenario, const pep_models* models, double alpha_p, int n_seeds,
                              uint64_t first_seed, const pep_replan_options* options, const char* out_dir,
                              double* success_rate);

#ifdef __cplusplus
}
#endif

#endif /* PEP_PEP_H_ */
