#ifndef GUIDE_GUIDE_H_
#define GUIDE_GUIDE_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(GUIDE_BUILDING_LIBRARY)
#define GUIDE_API __attribute__((visibility("default")))
#else
#define GUIDE_API
#endif

typedef enum guide_status {
  GUIDE_OK = 0,
  GUIDE_E_INVALID_ARGUMENT,
  GUIDE_E_EMPTY_TASK,
  GUIDE_E_UNKNOWN_SYMBOL,
  GUIDE_E_NO_OBJECTIVE,
  GUIDE_E_ZERO_VECTOR,
  GUIDE_E_FORMAT,
  GUIDE_E_MISSING_KEY,
  GUIDE_E_DIMENSION_MISMATCH,
  GUIDE_E_GRID_MISMATCH,
  GUIDE_E_DEGENERATE_SYSTEM,
  GUIDE_E_INVALID_CONFIG,
  GUIDE_E_NOT_RESET,
  GUIDE_E_SHAPE_MISMATCH,
  GUIDE_E_NON_FINITE_GRADIENT,
  GUIDE_E_NO_SAFE_PATH,
  GUIDE_E_EMPTY_LOGS,
  GUIDE_E_IO,
  GUIDE_E_RUNTIME,
} guide_status;

/* Opaque handles. */
typedef struct guide_vocab guide_vocab;
typedef struct guide_task guide_task;
typedef struct guide_tsum guide_tsum;
typedef struct guide_config guide_config;

typedef struct guide_summary {
  double tcr_percent;
  double avg_reward;
  double avg_exact_fixes;
  int n_episodes;
  double seed_spread;
} guide_summary;

/* Called once per finished training episode. */
typedef void (*guide_progress_fn)(long step, long episode, double ret, double tcr, void* user);

GUIDE_API const char* guide_version(void);
GUIDE_API const char* guide_status_name(guide_status status);
/* Message of the last failure on this thread; "" when none. */
GUIDE_API const char* guide_last_error(void);
/* Nonzero when the status describes bad input rather than a failed run. */
GUIDE_API int guide_status_is_config_error(guide_status status);
GUIDE_API void guide_string_free(char* s);

/* path NULL selects the built-in 100 x 100 m lake. */
GUIDE_API guide_status guide_vocab_load(const char* path, guide_vocab** out);
GUIDE_API void guide_vocab_free(guide_vocab* vocab);

GUIDE_API guide_status guide_task_parse(const guide_vocab* vocab, const char* text,
                                        guide_task** out);
/* Structured task as JSON; release with guide_string_free. */
GUIDE_API guide_status guide_task_json(const guide_task* task, char** out_json);
GUIDE_API void guide_task_free(guide_task* task);

/* embeddings: "mock" or an exported table (directory or manifest.json). */
GUIDE_API guide_status guide_tsum_build(const guide_vocab* vocab, const guide_task* task,
                                        const char* embeddings, guide_tsum** out);
GUIDE_API guide_status guide_tsum_size(const guide_tsum* tsum, int* nx, int* ny,
                                       double* cell_size);
/* Acceptable uncertainty (m) at an arena position. */
GUIDE_API guide_status guide_tsum_sample(const guide_tsum* tsum, double x, double y,
                                         double* out);
/* Writes the PGM and its JSON sidecar. */
GUIDE_API guide_status guide_tsum_write_pgm(const guide_tsum* tsum, const char* path);
GUIDE_API void guide_tsum_free(guide_tsum* tsum);

GUIDE_API guide_status guide_config_load(const char* path, guide_config** out);
GUIDE_API guide_status guide_config_from_json(const char* json, guide_config** out);
/* algo NULL keeps the configured algorithm. */
GUIDE_API guide_status guide_config_set_algo(guide_config* cfg, const char* algo);
GUIDE_API guide_status guide_config_set_seed(guide_config* cfg, uint64_t seed);
GUIDE_API guide_status guide_config_json(const guide_config* cfg, char** out_json);
GUIDE_API void guide_config_free(guide_config* cfg);

/* Trains the configured algorithm with its first seed and writes a run
 * directory. Planners only record their configuration. */
GUIDE_API guide_status guide_train(const guide_config* cfg, const char* out_dir,
                                   guide_progress_fn progress, void* user);
/* Greedy evaluation of a run directory; writes eval.csv and trajectories/. */
GUIDE_API guide_status guide_evaluate(const char* run_dir, int episodes, guide_summary* out);
/* All seeds of a configuration, with per-seed run directories under out_dir. */
GUIDE_API guide_status guide_experiment_run(const guide_config* cfg, const char* out_dir,
                                            guide_summary* out);
GUIDE_API guide_status guide_table(const char* const* run_dirs, size_t n, const char* out_csv);
/* env_json: environment file; tsum_pgm may be NULL. */
GUIDE_API guide_status guide_plot(const char* log_csv, const char* env_json, const char* tsum_pgm,
                                  const char* out_svg);

#ifdef __cplusplus
}
#endif

#endif  /* GUIDE_GUIDE_H_ */
