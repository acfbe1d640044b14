#ifndef STEREOLENS_H
#define STEREOLENS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_INVALID_UTF8 = 2,
  SL_STATUS_IO = 3,
  SL_STATUS_DATA = 4,
  SL_STATUS_INVALID_INPUT = 5,
  SL_STATUS_PROBE = 6,
  SL_STATUS_PANIC = 7,
} SlStatus;

/**
 * A token attribution with C copies of its tokens.
 */
typedef struct SlAttribution SlAttribution;

/**
 * A trained TF-IDF + logistic-regression classifier.
 */
typedef struct SlModel SlModel;

/**
 * Agreement between two attribution vectors. Undefined metrics are NaN
 * with their `*_defined` flag false.
 */
typedef struct SlAgreement {
  double cosine;
  double pearson;
  double jsd;
  bool cosine_defined;
  bool pearson_defined;
} SlAgreement;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next `sl_*` call on the same thread.
 */
const char *sl_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sl_version(void);

/**
 * Loads a model file written by `stereolens train`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum SlStatus sl_model_load(const char *path, struct SlModel **out);

/**
 * # Safety
 * `model` must come from `sl_model_load` and not be used afterwards. Null is ignored.
 */
void sl_model_free(struct SlModel *model);

/**
 * Stereotype probability for one text.
 *
 * # Safety
 * `model` must be live, `text` NUL-terminated and `out` writable.
 */
enum SlStatus sl_model_predict(const struct SlModel *model, const char *text, double *out);

/**
 * Shapley attribution: exact when the text has at most `exact_limit`
 * tokens, otherwise sampled with `samples` permutations.
 *
 * # Safety
 * `model` must be live, `text` NUL-terminated and `out` writable.
 */
enum SlStatus sl_explain_shap(const struct SlModel *model,
                              const char *text,
                              size_t exact_limit,
                              size_t samples,
                              uint64_t seed,
                              struct SlAttribution **out);

/**
 * LIME attribution.
 *
 * # Safety
 * `model` must be live, `text` NUL-terminated and `out` writable.
 */
enum SlStatus sl_explain_lime(const struct SlModel *model,
                              const char *text,
                              size_t num_samples,
                              double kernel_width,
                              double ridge_lambda,
                              uint64_t seed,
                              struct SlAttribution **out);

/**
 * Token count, or 0 for null.
 *
 * # Safety
 * `attr` must be live or null.
 */
size_t sl_attribution_len(const struct SlAttribution *attr);

/**
 * Token `i`, or null when out of range. Valid until the attribution is freed.
 *
 * # Safety
 * `attr` must be live or null.
 */
const char *sl_attribution_token(const struct SlAttribution *attr, size_t i);

/**
 * Value for token `i`, or NaN when out of range.
 *
 * # Safety
 * `attr` must be live or null.
 */
double sl_attribution_value(const struct SlAttribution *attr, size_t i);

/**
 * Empty-text prediction for SHAP, surrogate intercept for LIME.
 *
 * # Safety
 * `attr` must be live or null.
 */
double sl_attribution_base_value(const struct SlAttribution *attr);

/**
 * # Safety
 * `attr` must come from an `sl_explain_*` call and not be used afterwards. Null is ignored.
 */
void sl_attribution_free(struct SlAttribution *attr);

/**
 * Cosine, Pearson and JS distance between two equal-length vectors.
 *
 * # Safety
 * `phi` and `beta` must point to `len` doubles; `out` must be writable.
 */
enum SlStatus sl_agreement(const double *phi,
                           const double *beta,
                           size_t len,
                           struct SlAgreement *out);

/**
 * Grams of CO2 for a rate in g/s over a runtime in seconds.
 *
 * # Safety
 * `out` must be writable.
 */
enum SlStatus sl_estimate_emissions(double co2_per_second, double runtime_seconds, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STEREOLENS_H */
