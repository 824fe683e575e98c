/* C interface to the few-shot graph-propagation library.
 *
 * Every entry point returns lb_status; on failure lb_last_error() holds a
 * thread-local message describing what went wrong. Strings returned through
 * char** out-parameters are heap-allocated and must be released with
 * lb_string_free(). Handles are opaque; create/free pairs own them.
 */
#ifndef LOOKBACK_H
#define LOOKBACK_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Mirrors the process exit codes of the command-line tool. */
typedef enum lb_status {
  LB_OK = 0,
  LB_ERR_RUNTIME = 1,   /* I/O failures, divergence, bad checkpoints */
  LB_ERR_CONFIG = 2,    /* malformed or out-of-range configuration */
  LB_ERR_INFEASIBLE = 3 /* request impossible as stated, e.g. N-way > classes */
} lb_status;

/* Message for the most recent failure on this thread; never NULL. */
const char* lb_last_error(void);

void lb_string_free(char* s);

/* ---- configuration ----------------------------------------------------- */

typedef struct lb_config lb_config; /* a resolved run configuration */

/* Defaults only. */
lb_status lb_config_create(lb_config** out);
/* Parse a config file; unknown keys are rejected with a line diagnostic. */
lb_status lb_config_load(const char* path, lb_config** out);
/* Dotted-path override, e.g. ("train.weights", "0,0,1"). */
lb_status lb_config_set(lb_config* cfg, const char* key, const char* value);
/* Single value by dotted key, formatted as in the dump. */
lb_status lb_config_get(const lb_config* cfg, const char* key, char** out_value);
/* Full round-trippable text of the resolved configuration. */
lb_status lb_config_dump(const lb_config* cfg, char** out_text);
void lb_config_free(lb_config* cfg);

/* ---- data -------------------------------------------------------------- */

typedef struct lb_dataset lb_dataset; /* loaded train/val/test splits */

/* Loads the splits the config describes: generated in memory for synthetic
 * data, decoded from a class-per-folder tree for folder data. */
lb_status lb_dataset_open(const lb_config* cfg, lb_dataset** out);
void lb_dataset_free(lb_dataset* data);

/* Writes the synthetic dataset as a class-per-folder PNG tree that the
 * folder loader reads back bit-exactly. Refuses a non-empty target unless
 * force is nonzero (LB_ERR_INFEASIBLE). */
lb_status lb_synth_export(const lb_config* cfg, const char* out_root, int force);

/* ---- operations ---------------------------------------------------------
 *
 * Training uses the train and validation splits; evaluation and inspection
 * use the test split. Where a checkpoint path is given, the model geometry,
 * propagation settings (alpha, m, per-layer weights) and numeric precision
 * come from the checkpoint's embedded training configuration, so a
 * checkpoint evaluates the same way anywhere; the current config contributes
 * only the episode shape, episode count, seed and dataset. A NULL checkpoint
 * means a freshly initialized model taken entirely from the current config.
 */

/* Runs training into config's run directory: resolved config snapshot
 * (config.cfg), metrics stream (metrics.jsonl), checkpoints (*.lbck). */
lb_status lb_train(const lb_config* cfg, const lb_dataset* data);

/* Evaluates on the test split. out_json carries the full report (optionally
 * with the per-episode accuracy column); out_summary is a short text block,
 * one "xx.xx ± x.xx" percent line for the headline and one per layer.
 * Either out-pointer may be NULL if not wanted. */
lb_status lb_evaluate(const lb_config* cfg, const lb_dataset* data,
                      const char* checkpoint_or_null, int include_per_episode, char** out_json,
                      char** out_summary);

/* Paired comparison of two checkpoints on one shared episode sequence. */
lb_status lb_compare(const lb_config* cfg, const lb_dataset* data, const char* checkpoint_a,
                     const char* checkpoint_b, char** out_json);

/* Deterministic plain-text dump of one test episode's graph pipeline:
 * length scales, similarities, sparsified affinities, normalized operator,
 * initial and propagated scores, probabilities, per-layer losses. */
lb_status lb_inspect(const lb_config* cfg, const lb_dataset* data,
                     const char* checkpoint_or_null, uint64_t seed, char** out_text);

/* Central-difference check of the episode-loss gradient on one train-split
 * episode. Always runs in double precision regardless of the config (the
 * finite-difference oracle needs the headroom). At least min_samples
 * coordinates are checked, stratified so every trainable tensor appears.
 * out_passed is 1 when the max relative error stays within 1e-4. */
lb_status lb_gradcheck(const lb_config* cfg, const lb_dataset* data, uint64_t seed,
                       int min_samples, double* out_max_rel_err, int* out_passed,
                       char** out_report_json);

#ifdef __cplusplus
}
#endif

#endif /* LOOKBACK_H */
