#ifndef MOPR_H
#define MOPR_H

/*
 * C API for the multi-objective policy-repair library. The CLI and any
 * foreign-language embedding link against this surface only.
 *
 * Conventions: every function returns a mopr_status; MOPR_OK is 0 and the
 * nonzero codes double as process exit codes. On failure, mopr_last_error()
 * returns a message for the calling thread. Handles are opaque and must be
 * released with their _free function.
 */

#include <stdint.h>

#if defined(_WIN32)
#define MOPR_API __declspec(dllexport)
#else
#define MOPR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mopr_status {
  MOPR_OK = 0,
  MOPR_ERR_CONFIG = 2,
  MOPR_ERR_MISSING_INPUT = 3,
  MOPR_ERR_INTERNAL = 4,
} mopr_status;

MOPR_API const char* mopr_version(void);

/* Message for the most recent failure on this thread ("" if none). */
MOPR_API const char* mopr_last_error(void);

/* ---- run configuration (opaque) ---------------------------------------- */

typedef struct mopr_config mopr_config;

MOPR_API mopr_status mopr_config_default(mopr_config** out);
MOPR_API mopr_status mopr_config_load(const char* path, mopr_config** out);
MOPR_API mopr_status mopr_config_set(mopr_config* cfg, const char* key,
                                     const char* value);
MOPR_API void mopr_config_free(mopr_config* cfg);

/* ---- commands ----------------------------------------------------------- */

MOPR_API mopr_status mopr_cmd_gen_tasks(const mopr_config* cfg,
                                        const char* out_dir);

/* n_seeds == 1 writes into out_dir; larger values use seed_<s>/ subdirs. */
MOPR_API mopr_status mopr_cmd_evolve(const mopr_config* cfg,
                                     const char* suite_path,
                                     const char* out_dir, int n_seeds);

MOPR_API mopr_status mopr_cmd_replay(const mopr_config* cfg,
                                     const char* candidates_path,
                                     const char* out_dir);

/* rollout is "argmax" or "sample". */
MOPR_API mopr_status mopr_cmd_eval(const char* policy_path,
                                   const char* suite_path, const char* out_dir,
                                   const char* rollout, uint64_t seed);

MOPR_API mopr_status mopr_cmd_report(const char* run_dir, const char* out_dir);

/* Test-split metrics for a policy snapshot without touching the filesystem
 * for output: metrics_out receives asr, tsr, brr, hcr, vrr. */
MOPR_API mopr_status mopr_eval_metrics(const char* policy_path,
                                       const char* suite_path,
                                       const char* rollout, uint64_t seed,
                                       double metrics_out[5]);

#ifdef __cplusplus
}
#endif

#endif /* MOPR_H */
