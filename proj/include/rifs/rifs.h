#ifndef RIFS_RIFS_H
#define RIFS_RIFS_H

/* C interface to the rifs pipeline. Every call returns a status code; on
 * failure the message of the calling thread's last error is available from
 * rifs_last_error() and, for stage failures, the stage from
 * rifs_last_stage(). */

#include <stddef.h>

#if defined(_WIN32)
#define RIFS_API __declspec(dllexport)
#else
#define RIFS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rifs_status {
  RIFS_OK = 0,
  RIFS_E_INVALID_ARGUMENT = 1,
  RIFS_E_DOMAIN = 2,
  RIFS_E_INCONSISTENT = 3,
  RIFS_E_NUMERICAL = 4,
  RIFS_E_IO = 5,
  RIFS_E_CONFIG = 6,
  RIFS_E_INTERNAL = 100
} rifs_status;

typedef enum rifs_stage {
  RIFS_STAGE_SIMULATE = 0,
  RIFS_STAGE_EMBED,
  RIFS_STAGE_CLUSTER,
  RIFS_STAGE_UNEMBED,
  RIFS_STAGE_FIT,
  RIFS_STAGE_EVALUATE,
  RIFS_STAGE_PLOT,
  RIFS_STAGE_MANIFEST
} rifs_stage;

typedef struct rifs_config rifs_config;
typedef struct rifs_run rifs_run;

typedef struct rifs_evaluation {
  double purity;
  int clusters;
  int true_symbols;
  int recovered_symbols;
  double p_error;
  double mse;
  double box_overlap;
} rifs_evaluation;

RIFS_API const char* rifs_version(void);
RIFS_API const char* rifs_last_error(void);
/* Empty unless the last failure happened inside a pipeline stage. */
RIFS_API const char* rifs_last_stage(void);
RIFS_API const char* rifs_stage_name(rifs_stage stage);

RIFS_API rifs_status rifs_config_default(rifs_config** out);
RIFS_API rifs_status rifs_config_preset(const char* name, rifs_config** out);
RIFS_API rifs_status rifs_config_load(const char* path, rifs_config** out);
/* key is "section.key", e.g. "system.seed" or "hdi.degree". */
RIFS_API rifs_status rifs_config_set(rifs_config* cfg, const char* key, const char* value);
/* Takes the output directory from RIFS_OUTPUT_DIR when set. */
RIFS_API rifs_status rifs_config_apply_env(rifs_config* cfg);
RIFS_API rifs_status rifs_config_validate(const rifs_config* cfg, int require_seed);
RIFS_API rifs_status rifs_config_save(const rifs_config* cfg, const char* path);
/* Valid until the next change to cfg. */
RIFS_API const char* rifs_config_output_dir(const rifs_config* cfg);
RIFS_API void rifs_config_free(rifs_config* cfg);

/* Runs one stage on the run directory dir (simulate creates it). */
RIFS_API rifs_status rifs_run_stage(const rifs_config* cfg, rifs_stage stage, const char* dir);
RIFS_API rifs_status rifs_run_pipeline(const rifs_config* cfg, rifs_run** out);
RIFS_API rifs_status rifs_run_open(const char* dir, rifs_run** out);
RIFS_API const char* rifs_run_dir(const rifs_run* run);
RIFS_API size_t rifs_run_file_count(const rifs_run* run);
/* Path relative to the run directory; NULL when index is out of range. */
RIFS_API const char* rifs_run_file(const rifs_run* run, size_t index);
RIFS_API rifs_status rifs_run_evaluate(const rifs_run* run, rifs_evaluation* out);
RIFS_API void rifs_run_free(rifs_run* run);

#ifdef __cplusplus
}
#endif

#endif
