#ifndef TRIPCLASS_H
#define TRIPCLASS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TcStatus {
  TC_STATUS_OK = 0,
  TC_STATUS_NULL_POINTER = 1,
  TC_STATUS_INVALID_UTF8 = 2,
  TC_STATUS_IO = 3,
  TC_STATUS_CORRUPT_MODEL = 4,
  TC_STATUS_INVALID_ARGUMENT = 5,
  TC_STATUS_INPUT_TOO_SHORT = 6,
  TC_STATUS_PANIC = 7,
} TcStatus;

/**
 * Model handle for the work/leisure classifier.
 */
typedef struct TcClassifier TcClassifier;

/**
 * Model handle for the language identifier.
 */
typedef struct TcLangId TcLangId;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next call into this library on the same thread.
 */
const char *tc_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *tc_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void tc_string_free(char *s);

/**
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum TcStatus tc_classifier_load(const char *path, struct TcClassifier **out);

/**
 * Writes the predicted label code and the probability of that label.
 *
 * # Safety
 * `model` must come from [`tc_classifier_load`]; all pointers must be valid.
 */
enum TcStatus tc_classifier_predict(const struct TcClassifier *model,
                                    const char *text,
                                    uint8_t *out_label,
                                    double *out_score);

/**
 * # Safety
 * `model` must be null or come from [`tc_classifier_load`], freed once.
 */
void tc_classifier_free(struct TcClassifier *model);

/**
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum TcStatus tc_langid_load(const char *path, struct TcLangId **out);

/**
 * Writes the most probable language code (free with [`tc_string_free`]) and
 * its probability.
 *
 * # Safety
 * `model` must come from [`tc_langid_load`]; all pointers must be valid.
 */
enum TcStatus tc_langid_detect(const struct TcLangId *model,
                               const char *text,
                               char **out_lang,
                               double *out_confidence);

/**
 * # Safety
 * `model` must be null or come from [`tc_langid_load`], freed once.
 */
void tc_langid_free(struct TcLangId *model);

/**
 * Macro-averaged F1 over the two classes.
 *
 * # Safety
 * `golds` and `preds` must point to `len` bytes; `out` must be valid.
 */
enum TcStatus tc_macro_f1(const uint8_t *golds, const uint8_t *preds, size_t len, double *out);

/**
 * Micro-averaged F1 (equal to accuracy for two classes).
 *
 * # Safety
 * `golds` and `preds` must point to `len` bytes; `out` must be valid.
 */
enum TcStatus tc_micro_f1(const uint8_t *golds, const uint8_t *preds, size_t len, double *out);

/**
 * Two-sided paired t-test of per-fold scores `a` against `b`.
 *
 * # Safety
 * `a` and `b` must point to `len` doubles; out-pointers must be valid.
 */
enum TcStatus tc_paired_t_test(const double *a,
                               const double *b,
                               size_t len,
                               double *out_t,
                               double *out_p);

/**
 * Mean and 95% confidence half-width of per-fold scores.
 *
 * # Safety
 * `values` must point to `len` doubles; out-pointers must be valid.
 */
enum TcStatus tc_mean_ci(const double *values,
                         size_t len,
                         double *out_mean,
                         double *out_half_width);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRIPCLASS_H */
