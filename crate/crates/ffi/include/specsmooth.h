#ifndef SPECSMOOTH_H
#define SPECSMOOTH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

typedef enum SsBasisMode {
  SS_BASIS_MODE_PHANTOM_EXTENDED = 0,
  SS_BASIS_MODE_STRICT = 1,
} SsBasisMode;

typedef enum SsBoundary {
  SS_BOUNDARY_MIRROR = 0,
  SS_BOUNDARY_CLAMP = 1,
} SsBoundary;

typedef enum SsKernel {
  SS_KERNEL_WAVG3 = 0,
  SS_KERNEL_WAVG5 = 1,
} SsKernel;

typedef enum SsSelectionRule {
  SS_SELECTION_RULE_GLOBAL_MIN = 0,
  SS_SELECTION_RULE_FIRST_LOCAL_MIN = 1,
  SS_SELECTION_RULE_FIXED = 2,
} SsSelectionRule;

typedef enum SsStatus {
  SS_STATUS_OK = 0,
  SS_STATUS_NULL_POINTER = 1,
  SS_STATUS_INVALID_ARGUMENT = 2,
  SS_STATUS_IO = 3,
  SS_STATUS_FORMAT = 4,
  SS_STATUS_RANGE = 5,
  SS_STATUS_NUMERIC = 6,
  SS_STATUS_BUFFER_TOO_SMALL = 7,
  SS_STATUS_PANIC = 99,
} SsStatus;

/**
 * Opaque spectrum handle.
 */
typedef struct SsSpectrum SsSpectrum;

/**
 * Opaque refinement trace handle.
 */
typedef struct SsTrace SsTrace;

/**
 * B-spline smoothing options. Obtain defaults from
 * [`ss_smooth_config_default`].
 */
typedef struct SsSmoothConfig {
  enum SsBasisMode basis;
  double min_spacing;
  uint32_t max_levels;
  enum SsSelectionRule rule;
  /**
   * Level used when `rule` is `Fixed`.
   */
  uint32_t fixed_level;
  /**
   * When false the whole spectrum is smoothed and the range is ignored.
   */
  bool use_range;
  /**
   * First and last index (not channel label) of the smoothed range.
   */
  size_t range_start;
  size_t range_end;
} SsSmoothConfig;

typedef struct SsLevelRecord {
  uint32_t level;
  size_t knot_count;
  double spacing;
  double rss;
  bool has_epsilon;
  /**
   * Zero when `has_epsilon` is false (the last level).
   */
  double epsilon;
} SsLevelRecord;

typedef struct SsPeak {
  double centroid;
  double fwhm;
  double height;
} SsPeak;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ss_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ss_version(void);

/**
 * Cardinal cubic B-spline.
 */
double ss_phi(double x);

/**
 * Copies `len` counts into a new spectrum. Counts must be finite and
 * non-negative, with at least 16 channels.
 *
 * # Safety
 * `counts` must point to `len` readable doubles; `out` must be writable.
 */
enum SsStatus ss_spectrum_new(const double *counts, size_t len, struct SsSpectrum **out);

/**
 * Loads a spectrum file; `.csv` files use the `channel,count` format,
 * anything else is read as one count per line.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SsStatus ss_spectrum_load(const char *path, struct SsSpectrum **out);

/**
 * Writes `channel,count` CSV.
 *
 * # Safety
 * `spectrum` must be a live handle; `path` a NUL-terminated string.
 */
enum SsStatus ss_spectrum_save(const struct SsSpectrum *spectrum, const char *path);

/**
 * Number of channels, or 0 for a NULL handle.
 *
 * # Safety
 * `spectrum` must be NULL or a live handle.
 */
size_t ss_spectrum_len(const struct SsSpectrum *spectrum);

/**
 * Copies the counts into `buffer`, which must hold at least
 * `ss_spectrum_len` values.
 *
 * # Safety
 * `spectrum` must be a live handle; `buffer` must hold `capacity` doubles.
 */
enum SsStatus ss_spectrum_copy_counts(const struct SsSpectrum *spectrum,
                                      double *buffer,
                                      size_t capacity);

/**
 * # Safety
 * `spectrum` must be NULL or a handle not yet freed.
 */
void ss_spectrum_free(struct SsSpectrum *spectrum);

struct SsSmoothConfig ss_smooth_config_default(void);

/**
 * Multi-level B-spline smoothing. `config` may be NULL for defaults.
 * `out_trace` may be NULL when the trace is not wanted.
 *
 * # Safety
 * Handles must be live; output pointers writable.
 */
enum SsStatus ss_smooth_bspline(const struct SsSpectrum *spectrum,
                                const struct SsSmoothConfig *config,
                                struct SsSpectrum **out_spectrum,
                                struct SsTrace **out_trace);

/**
 * Iterated weighted-mean smoothing with a built-in kernel.
 *
 * # Safety
 * `spectrum` must be a live handle; `out` writable.
 */
enum SsStatus ss_convolve_smooth(const struct SsSpectrum *spectrum,
                                 enum SsKernel kernel,
                                 uint32_t iterations,
                                 enum SsBoundary boundary,
                                 struct SsSpectrum **out);

/**
 * Number of refinement levels in the trace, or 0 for a NULL handle.
 *
 * # Safety
 * `trace` must be NULL or a live handle.
 */
size_t ss_trace_level_count(const struct SsTrace *trace);

/**
 * Selected level, or 0 if none was selected or the handle is NULL.
 *
 * # Safety
 * `trace` must be NULL or a live handle.
 */
uint32_t ss_trace_selected_level(const struct SsTrace *trace);

/**
 * Copies the record at zero-based `index` (level `index + 1`).
 *
 * # Safety
 * `trace` must be a live handle; `out` writable.
 */
enum SsStatus ss_trace_record(const struct SsTrace *trace, size_t index, struct SsLevelRecord *out);

/**
 * # Safety
 * `trace` must be NULL or a handle not yet freed.
 */
void ss_trace_free(struct SsTrace *trace);

/**
 * Synthetic benchmark spectrum pair (noiseless truth and Poisson sample).
 * Either output may be NULL.
 *
 * # Safety
 * Non-NULL output pointers must be writable.
 */
enum SsStatus ss_synth_benchmark(size_t channels,
                                 uint64_t seed,
                                 struct SsSpectrum **out_truth,
                                 struct SsSpectrum **out_noisy);

/**
 * Root-mean-square difference over all channels.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum SsStatus ss_rmse(const struct SsSpectrum *a, const struct SsSpectrum *b, double *out);

/**
 * Centroid, FWHM and height of the highest peak between indices
 * `start` and `end` inclusive.
 *
 * # Safety
 * `spectrum` must be a live handle; `out` writable.
 */
enum SsStatus ss_measure_peak(const struct SsSpectrum *spectrum,
                              size_t start,
                              size_t end,
                              struct SsPeak *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECSMOOTH_H */
