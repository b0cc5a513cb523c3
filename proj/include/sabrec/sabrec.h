/* sabrec: session-aware sequential recommender, C interface.
 *
 * All functions return SABREC_OK (0) on success; on failure they return a
 * status code and leave a message readable through sabrec_last_error() on
 * the calling thread. Handles are opaque and must be released with their
 * close function. JSON configuration strings are UTF-8.
 */
#ifndef SABREC_H
#define SABREC_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define SABREC_API __declspec(dllexport)
#else
#define SABREC_API __attribute__((visibility("default")))
#endif

typedef enum sabrec_status {
  SABREC_OK = 0,
  SABREC_ERR_INVALID_ARG = 1,
  SABREC_ERR_IO = 2,
  SABREC_ERR_PARSE = 3,
  SABREC_ERR_CONFIG = 4,
  SABREC_ERR_NUMERIC = 5,
  SABREC_ERR_INTERNAL = 6
} sabrec_status;

typedef struct sabrec_dataset sabrec_dataset;

SABREC_API const char* sabrec_version(void);

/* Message for the most recent failure on this thread; empty string if none. */
SABREC_API const char* sabrec_last_error(void);

/* Parse a raw dataset file (format "ml1m", "ml20m" or "steam"), apply
 * preprocessing (rare-item and short-history filters, 200-event recency cap,
 * one-day sessionization, short-session and few-session filters) and write
 * events.tsv, vocab.tsv and stats.csv into out_dir. */
SABREC_API sabrec_status sabrec_preprocess(const char* input_path, const char* format,
                                           const char* out_dir);

/* Write a synthetic dataset with planted session structure into out_dir.
 * config_json may be NULL; keys: users, clusters, items_per_cluster,
 * min_sessions, max_sessions, seed. */
SABREC_API sabrec_status sabrec_synthesize(const char* config_json, const char* out_dir);

/* Open a dataset directory containing events.tsv and vocab.tsv. */
SABREC_API sabrec_status sabrec_dataset_open(const char* dir, sabrec_dataset** out);
SABREC_API void sabrec_dataset_close(sabrec_dataset* dataset);
SABREC_API sabrec_status sabrec_dataset_counts(const sabrec_dataset* dataset, int64_t* users,
                                               int64_t* items, int64_t* events);

/* Trainable parameter count for a model configuration. A dataset may be
 * given to fill vocab_items; pass NULL if the config carries it. */
SABREC_API sabrec_status sabrec_num_parameters(const char* model_config_json,
                                               const sabrec_dataset* dataset, int64_t* out);

/* Train on the dataset's training split and write the best-validation
 * checkpoint to checkpoint_path. epoch_log_path (CSV: epoch, train_loss,
 * val_ndcg10, seconds) may be NULL. */
SABREC_API sabrec_status sabrec_train(const sabrec_dataset* dataset,
                                      const char* model_config_json,
                                      const char* train_config_json,
                                      const char* checkpoint_path, const char* epoch_log_path);

typedef struct sabrec_metrics {
  double recall;
  double ndcg;
  int64_t users;
} sabrec_metrics;

/* Rank the held-out test item of every user against a candidate set
 * ("random", "popular" or "all") at cutoff k. infer_time_mode selects the
 * timestamp carried by the mask token: "target" (default when NULL) or
 * "last" for the last observed interaction. */
SABREC_API sabrec_status sabrec_evaluate(const sabrec_dataset* dataset,
                                         const char* checkpoint_path, const char* scheme,
                                         int32_t k, uint64_t seed, int32_t workers,
                                         const char* infer_time_mode, sabrec_metrics* out);

/* Popularity baseline under the same evaluation protocol. */
SABREC_API sabrec_status sabrec_pop_baseline(const sabrec_dataset* dataset, const char* scheme,
                                             int32_t k, uint64_t seed, sabrec_metrics* out);

#ifdef __cplusplus
}
#endif

#endif /* SABREC_H */
