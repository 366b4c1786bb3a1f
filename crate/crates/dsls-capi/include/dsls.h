#ifndef DSLS_H
#define DSLS_H

/* Generated from the dsls-capi crate by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible API function.
 */
typedef enum DslsStatus {
  DSLS_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  DSLS_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  DSLS_STATUS_UTF8_ERROR = 2,
  /**
   * The configuration failed to parse or validate.
   */
  DSLS_STATUS_INVALID_CONFIG = 3,
  /**
   * The simulation hit a numerical failure (e.g. a singular information
   * matrix or a solver that did not converge).
   */
  DSLS_STATUS_NUMERICAL_FAILURE = 4,
  /**
   * Reading or writing files failed.
   */
  DSLS_STATUS_IO_ERROR = 5,
  /**
   * An index argument was out of range.
   */
  DSLS_STATUS_OUT_OF_RANGE = 6,
  /**
   * An internal invariant failed (a bug; details in the error message).
   */
  DSLS_STATUS_INTERNAL = 7,
} DslsStatus;

/**
 * Column selector for [`dsls_summary_value`].
 */
typedef enum DslsSummaryField {
  /**
   * Round index `t` (1-based), returned as a double.
   */
  DSLS_SUMMARY_FIELD_T = 0,
  /**
   * Mean over (repeat, sensor) pairs of the plain LS estimate's error.
   */
  DSLS_SUMMARY_FIELD_LS_ERR_MEAN = 1,
  DSLS_SUMMARY_FIELD_LS_ERR_STD = 2,
  /**
   * Mean over (repeat, sensor) pairs of the sparse estimate's error.
   */
  DSLS_SUMMARY_FIELD_SPARSE_ERR_MEAN = 3,
  DSLS_SUMMARY_FIELD_SPARSE_ERR_STD = 4,
  /**
   * Mean over repeats of cumulative regret.
   */
  DSLS_SUMMARY_FIELD_REGRET_MEAN = 5,
  DSLS_SUMMARY_FIELD_REGRET_STD = 6,
  DSLS_SUMMARY_FIELD_COOP_RATIO_MEAN = 7,
  /**
   * Fraction of (repeat, sensor) pairs whose zero set matches the truth.
   */
  DSLS_SUMMARY_FIELD_ZERO_AGREE_FRAC = 8,
  /**
   * How many (repeat, sensor) pairs first became stably correct at this
   * round, returned as a double.
   */
  DSLS_SUMMARY_FIELD_T0_COUNT = 9,
} DslsSummaryField;

/**
 * Opaque experiment configuration handle.
 */
typedef struct DslsConfig DslsConfig;

/**
 * Opaque result handle: one row of aggregate statistics per round.
 */
typedef struct DslsSummary DslsSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message from the most recent failing call on this thread, or NULL if no
 * call has failed yet. The pointer stays valid until the next failing call
 * on the same thread; do not free it.
 */
const char *dsls_last_error_message(void);

/**
 * Release a string returned by this API. NULL is a no-op.
 */
void dsls_string_free(char *s);

/**
 * Create the built-in reference configuration (six sensors on a ring,
 * five-coordinate parameter with two active entries, 200 rounds, 100
 * repeats). Release with [`dsls_config_free`].
 */
struct DslsConfig *dsls_config_default(void);

/**
 * Parse and validate a JSON configuration document. On success, `*out`
 * receives a new handle (release with [`dsls_config_free`]).
 */
enum DslsStatus dsls_config_parse(const char *json, struct DslsConfig **out);

/**
 * Serialize a configuration to pretty-printed JSON. On success, `*out`
 * receives a string owned by the caller (release with [`dsls_string_free`]).
 */
enum DslsStatus dsls_config_to_json(const struct DslsConfig *cfg, char **out);

/**
 * Override the master seed.
 */
enum DslsStatus dsls_config_set_seed(struct DslsConfig *cfg, uint64_t seed);

/**
 * Override the mode: "distributed", "non_cooperative", or "ls_only".
 */
enum DslsStatus dsls_config_set_mode(struct DslsConfig *cfg, const char *mode);

/**
 * Release a configuration handle. NULL is a no-op.
 */
void dsls_config_free(struct DslsConfig *cfg);

/**
 * Run every repeat of the experiment and aggregate per-round statistics.
 *
 * `out_dir` may be NULL (no files) or a directory path; when given, one
 * `run_<s>.csv` per repeat plus `summary.csv` are written there (the
 * directory is created if needed). `workers >= 1` sets repeat-level
 * parallelism; results are byte- and bit-identical for any worker count.
 * On success, `*out` receives a summary handle (release with
 * [`dsls_summary_free`]).
 */
enum DslsStatus dsls_run(const struct DslsConfig *cfg,
                         const char *out_dir,
                         size_t workers,
                         struct DslsSummary **out);

/**
 * Number of rounds (rows) in a summary; 0 for NULL.
 */
size_t dsls_summary_rounds(const struct DslsSummary *summary);

/**
 * Read one aggregate statistic. `row` is 0-based (row `k` describes round
 * `k + 1`); integer-valued fields are returned as doubles.
 */
enum DslsStatus dsls_summary_value(const struct DslsSummary *summary,
                                   size_t row,
                                   enum DslsSummaryField field,
                                   double *out);

/**
 * Release a summary handle. NULL is a no-op.
 */
void dsls_summary_free(struct DslsSummary *summary);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DSLS_H */
