#ifndef WOAMLP_H
#define WOAMLP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; values 1 to 4 match the CLI exit codes.
 */
typedef enum WoamlpStatus {
  WOAMLP_STATUS_OK = 0,
  WOAMLP_STATUS_USAGE = 1,
  WOAMLP_STATUS_IO = 2,
  WOAMLP_STATUS_DATA = 3,
  WOAMLP_STATUS_NUMERIC = 4,
  WOAMLP_STATUS_NULL_POINTER = 5,
  WOAMLP_STATUS_INVALID_UTF8 = 6,
  WOAMLP_STATUS_BUFFER_TOO_SMALL = 7,
  WOAMLP_STATUS_PANIC = 8,
} WoamlpStatus;

/**
 * Opaque trained model.
 */
typedef struct WoamlpModel WoamlpModel;

typedef struct WoamlpMetrics {
  double acc;
  double sen;
  double spe;
  double pre;
  double f1;
  double mcc;
  double kappa;
} WoamlpMetrics;

/**
 * Objective for `woamlp_woa_minimize`: `x` points to `dim` values.
 */
typedef double (*WoamlpObjective)(const double *x, size_t dim, void *user_data);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next `woamlp_*` call on the same thread.
 */
const char *woamlp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *woamlp_version(void);

/**
 * Loads a model JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum WoamlpStatus woamlp_model_load(const char *path, struct WoamlpModel **out);

/**
 * Parses a model from a JSON string.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum WoamlpStatus woamlp_model_from_json(const char *json, struct WoamlpModel **out);

/**
 * Writes the model as JSON.
 *
 * # Safety
 * `model` must come from this library; `path` must be NUL-terminated.
 */
enum WoamlpStatus woamlp_model_save(const struct WoamlpModel *model, const char *path);

/**
 * Releases a model. NULL is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void woamlp_model_free(struct WoamlpModel *model);

/**
 * Feature width the model expects, or 0 for NULL.
 *
 * # Safety
 * `model` must be NULL or come from this library.
 */
size_t woamlp_model_input_size(const struct WoamlpModel *model);

/**
 * Number of output classes, or 0 for NULL.
 *
 * # Safety
 * `model` must be NULL or come from this library.
 */
size_t woamlp_model_class_count(const struct WoamlpModel *model);

/**
 * Class probabilities and argmax class index for one feature vector.
 *
 * `probs_out` may be NULL; otherwise it must hold `probs_len >=
 * class_count` values. `class_out` may be NULL.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum WoamlpStatus woamlp_model_predict(const struct WoamlpModel *model,
                                       const double *x,
                                       size_t len,
                                       double *probs_out,
                                       size_t probs_len,
                                       size_t *class_out);

/**
 * Trains on every row of a feature CSV.
 *
 * `config_json` uses the CLI run-config keys (`seed`, `hidden_layers`,
 * `hidden_activation`, `weight_bound`, `normalize`, `woa.*`); NULL means
 * defaults. Split-related keys are ignored.
 *
 * # Safety
 * Strings must be NUL-terminated; `out` must be writable.
 */
enum WoamlpStatus woamlp_train_csv(const char *data_path,
                                   const char *config_json,
                                   struct WoamlpModel **out);

/**
 * The seven metrics for a binary confusion matrix.
 *
 * # Safety
 * `out` must be writable.
 */
enum WoamlpStatus woamlp_metrics(uint64_t true_pos,
                                 uint64_t false_neg,
                                 uint64_t false_pos,
                                 uint64_t true_neg,
                                 struct WoamlpMetrics *out);

/**
 * Minimizes a C objective over the box `[lower, upper]` (each `dim`
 * values). The callback runs on the calling thread only. `best_out` must
 * hold `dim` values.
 *
 * # Safety
 * Pointers must be valid for the stated lengths; `objective` must be safe
 * to call with `user_data`.
 */
enum WoamlpStatus woamlp_woa_minimize(WoamlpObjective objective,
                                      void *user_data,
                                      size_t dim,
                                      const double *lower,
                                      const double *upper,
                                      size_t population_size,
                                      size_t max_iterations,
                                      double spiral_shape,
                                      uint64_t seed,
                                      double *best_out,
                                      double *fitness_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WOAMLP_H */
