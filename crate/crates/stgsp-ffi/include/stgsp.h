#ifndef STGSP_H
#define STGSP_H

/* Generated by cbindgen from stgsp-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible entry point.
 */
typedef enum StgspStatus {
  STGSP_STATUS_OK = 0,
  STGSP_STATUS_NULL_ARGUMENT = 1,
  STGSP_STATUS_INVALID_UTF8 = 2,
  STGSP_STATUS_IO_ERROR = 3,
  STGSP_STATUS_FORMAT_ERROR = 4,
  STGSP_STATUS_INVALID_VALUE = 5,
  STGSP_STATUS_SIZE_CAP_EXCEEDED = 6,
  STGSP_STATUS_DIMENSION_MISMATCH = 7,
  STGSP_STATUS_CONVERGENCE_FAILED = 8,
  STGSP_STATUS_OVERFLOW = 9,
  STGSP_STATUS_NON_FINITE_OUTPUT = 10,
  STGSP_STATUS_EXTRACTION_FAILED = 11,
  STGSP_STATUS_INTERNAL_PANIC = 12,
} StgspStatus;

/**
 * Opaque pipeline configuration handle.
 */
typedef struct StgspConfig StgspConfig;

/**
 * Opaque feature-vector handle.
 */
typedef struct StgspFeatures StgspFeatures;

/**
 * Opaque signal handle.
 */
typedef struct StgspSignal StgspSignal;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buffer` (truncated to
 * `length - 1` bytes, always NUL-terminated) and returns the full message
 * length in bytes. With a null buffer, just returns the needed length.
 */
size_t stgsp_last_error_message(char *buffer, size_t length);

/**
 * Allocates a configuration with the library defaults.
 */
struct StgspConfig *stgsp_config_default(void);

/**
 * Loads a configuration from a TOML key-value file.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be a valid pointer.
 */
enum StgspStatus stgsp_config_from_file(const char *path, struct StgspConfig **out);

/**
 * Releases a configuration handle.
 *
 * # Safety
 * `config` must come from this library and not be freed twice.
 */
void stgsp_config_free(struct StgspConfig *config);

/**
 * Builds a signal from a row-major `channels x samples` buffer (each
 * channel's samples contiguous).
 *
 * # Safety
 * `data` must point to `channels * samples` doubles; `out` must be valid.
 */
enum StgspStatus stgsp_signal_from_data(const double *data,
                                        size_t channels,
                                        size_t samples,
                                        double sample_rate_hz,
                                        struct StgspSignal **out);

/**
 * Reads a signal from a CSV file (rows = channels).
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be valid.
 */
enum StgspStatus stgsp_signal_from_csv(const char *path,
                                       double sample_rate_hz,
                                       struct StgspSignal **out);

/**
 * Reports a signal's channel and sample counts.
 *
 * # Safety
 * All pointers must be valid.
 */
enum StgspStatus stgsp_signal_shape(const struct StgspSignal *signal,
                                    size_t *channels,
                                    size_t *samples);

/**
 * Releases a signal handle.
 *
 * # Safety
 * `signal` must come from this library and not be freed twice.
 */
void stgsp_signal_free(struct StgspSignal *signal);

/**
 * Runs the full hierarchical extraction on one signal.
 *
 * # Safety
 * `signal` and `config` must be live handles; `out` must be valid.
 */
enum StgspStatus stgsp_extract_features(const struct StgspSignal *signal,
                                        const struct StgspConfig *config,
                                        struct StgspFeatures **out);

/**
 * Number of features in the vector; 0 for a null handle.
 *
 * # Safety
 * `features` must be a live handle or null.
 */
size_t stgsp_features_len(const struct StgspFeatures *features);

/**
 * Copies feature values into `buffer` (`length` doubles; must be at least
 * the vector length).
 *
 * # Safety
 * `buffer` must point to at least `length` doubles.
 */
enum StgspStatus stgsp_features_values(const struct StgspFeatures *features,
                                       double *buffer,
                                       size_t length);

/**
 * Name of feature `index`, or null when out of range. The pointer borrows
 * from the handle.
 *
 * # Safety
 * `features` must be a live handle or null.
 */
const char *stgsp_features_name(const struct StgspFeatures *features, size_t index);

/**
 * Releases a feature-vector handle.
 *
 * # Safety
 * `features` must come from this library and not be freed twice.
 */
void stgsp_features_free(struct StgspFeatures *features);

/**
 * Area under the ROC curve of binary labels (0/1) against scores, ties
 * half-credited.
 *
 * # Safety
 * `scores` and `labels` must hold `length` elements; `out` must be valid.
 */
enum StgspStatus stgsp_auc(const double *scores, const uint8_t *labels, size_t length, double *out);

/**
 * Bytes a dense `(S*T) x (S*T)` adjacency would need at `bytes_per_entry`
 * per entry.
 *
 * # Safety
 * `out` must be valid.
 */
enum StgspStatus stgsp_estimate_dense_bytes(size_t channels,
                                            size_t samples,
                                            size_t bytes_per_entry,
                                            uint64_t *out);

/**
 * Library version as a static string.
 */
const char *stgsp_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STGSP_H */
