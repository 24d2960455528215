// Copyright 2026 The mfac Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the mfac library. Every function returns an mfac_status;
 * on failure, mfac_last_error() describes the problem (thread-local). Handles
 * are opaque and owned by the caller, who releases them with the matching
 * _free function. */
#ifndef MFAC_MFAC_H_
#define MFAC_MFAC_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  MFAC_OK = 0,
  MFAC_ERR_INPUT = 1,      /* malformed arguments, configs or files */
  MFAC_ERR_NUMERICAL = 2,  /* divergence or a failed solve */
  MFAC_ERR_DOMAIN = 3,     /* argument outside a function's domain */
  MFAC_ERR_INVARIANT = 4,  /* an internal invariant was violated */
  MFAC_ERR_IO = 5,
  MFAC_ERR_INTERNAL = 6
} mfac_status;

typedef struct mfac_mdp mfac_mdp;
typedef struct mfac_config mfac_config;
typedef struct mfac_result mfac_result;

typedef struct {
  long iterations;
  double j_star;
  double final_j;
  double final_gap;
  double avg_gap;
  double policy_eval_error;
  double zeta;
  double kappa;
  double bound_residual;
  int restarts;
} mfac_run_summary;

typedef void (*mfac_line_callback)(const char* line, void* user);

const char* mfac_version(void);
const char* mfac_last_error(void);
const char* mfac_status_name(mfac_status status);

/* MDPs */
mfac_status mfac_mdp_load(const char* path, mfac_mdp** out);
mfac_status mfac_mdp_benchmark(const char* name, mfac_mdp** out);
mfac_status mfac_mdp_from_config(const mfac_config* cfg, mfac_mdp** out);
mfac_status mfac_mdp_generate_representable(int n_states, int n_actions, double gamma,
                                            uint64_t seed, mfac_mdp** out);
mfac_status mfac_mdp_save(const mfac_mdp* mdp, const char* path);
mfac_status mfac_mdp_shape(const mfac_mdp* mdp, int* n_states, int* n_actions, double* gamma);
mfac_status mfac_mdp_optimal_return(const mfac_mdp* mdp, double* j_star);
void mfac_mdp_free(mfac_mdp* mdp);

/* Experiment configs */
mfac_status mfac_config_default(mfac_config** out);
mfac_status mfac_config_load(const char* path, mfac_config** out);
mfac_status mfac_config_parse(const char* json, mfac_config** out);
mfac_status mfac_config_set_seed(mfac_config* cfg, uint64_t seed);
mfac_status mfac_config_set_output(mfac_config* cfg, const char* dir);
/* Replaces the sweep grid; spec looks like "alpha=1,4,16;eta=1,64". */
mfac_status mfac_config_set_sweep(mfac_config* cfg, const char* spec);
/* Writes the normalized config as JSON into buf (NUL-terminated when it fits);
 * *needed receives the full length including the terminator. */
mfac_status mfac_config_to_json(const mfac_config* cfg, char* buf, size_t cap, size_t* needed);
void mfac_config_free(mfac_config* cfg);

/* Runs */
mfac_status mfac_run(const mfac_config* cfg, mfac_result** out);
mfac_status mfac_result_summary(const mfac_result* result, mfac_run_summary* out);
mfac_status mfac_result_metrics_csv(const mfac_result* result, char* buf, size_t cap,
                                    size_t* needed);
mfac_status mfac_result_write(const mfac_result* result, const char* dir);
void mfac_result_free(mfac_result* result);

/* Runs every cell of the config's sweep grid on `threads` workers and writes
 * cell_<i>.csv plus summary.csv into out_dir. */
mfac_status mfac_sweep(const mfac_config* cfg, int threads, const char* out_dir, int* n_cells);

/* Runs the built-in consistency suite, one line per check through cb. */
mfac_status mfac_verify(uint64_t seed, mfac_line_callback cb, void* user, int* n_failed);

/* Fits a representable description to the MDP and writes it as JSON. */
mfac_status mfac_fit(const mfac_mdp* mdp, int n_atoms, uint64_t seed, const char* out_path,
                     double* residual, int* conforming);

#ifdef __cplusplus
}
#endif

#endif  /* MFAC_MFAC_H_ */
