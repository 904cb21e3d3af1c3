#ifndef FRACSPEC_H
#define FRACSPEC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum FsStatus {
  FS_STATUS_OK = 0,
  FS_STATUS_NULL_POINTER = 1,
  /**
   * A parameter violates a precondition.
   */
  FS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Input data rejected (malformed, non-positive, degenerate).
   */
  FS_STATUS_INVALID_DATA = 3,
  FS_STATUS_IO = 4,
  /**
   * Output buffer smaller than required; see `len_out`.
   */
  FS_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * Internal panic caught at the boundary.
   */
  FS_STATUS_INTERNAL = 6,
} FsStatus;

/**
 * Opaque segmentation result.
 */
typedef struct FsPartition FsPartition;

/**
 * Opaque log-price series.
 */
typedef struct FsSeries FsSeries;

/**
 * Opaque rolling-window track.
 */
typedef struct FsTrack FsTrack;

/**
 * Power-law parameters of one fit.
 */
typedef struct FsFit {
  /**
   * Hurst exponent clamped to [0.05, 0.95].
   */
  double hurst;
  double raw_hurst;
  /**
   * Volatility per sampling interval.
   */
  double volatility;
  double intercept;
  double slope;
} FsFit;

typedef struct FsTrackPoint {
  size_t start;
  double center;
  struct FsFit fit;
} FsTrackPoint;

typedef struct FsSegment {
  size_t start;
  size_t len;
  double residual;
  struct FsFit fit;
} FsSegment;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *fs_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *fs_version(void);

/**
 * Creates a series from `n` positive prices on consecutive days.
 *
 * # Safety
 * `prices` must point to `n` readable values; `out` must be writable.
 */
enum FsStatus fs_series_from_prices(const double *prices, size_t n, struct FsSeries **out);

/**
 * Creates a series from `n` log-prices.
 *
 * # Safety
 * `values` must point to `n` readable values; `out` must be writable.
 */
enum FsStatus fs_series_from_log(const double *values, size_t n, struct FsSeries **out);

/**
 * Loads a `date,price` CSV.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum FsStatus fs_series_load_csv(const char *path, struct FsSeries **out);

/**
 * Number of samples, 0 for a null handle.
 *
 * # Safety
 * `s` must be null or a live handle.
 */
size_t fs_series_len(const struct FsSeries *s);

/**
 * Copies the log-prices.
 *
 * # Safety
 * `s` must be a live handle; `out` must hold `cap` values.
 */
enum FsStatus fs_series_values(const struct FsSeries *s, double *out, size_t cap, size_t *len_out);

/**
 * # Safety
 * `s` must be null or a handle not freed before.
 */
void fs_series_free(struct FsSeries *s);

/**
 * Gaussian-regularized copy of a series.
 *
 * # Safety
 * `s` must be a live handle; `out` must be writable.
 */
enum FsStatus fs_series_gaussianize(const struct FsSeries *s, struct FsSeries **out);

/**
 * Model spectrum `s^2 h(H) (2j)^{2H+1}`.
 */
double fs_model_spectrum(double hurst, double volatility, size_t j);

/**
 * Scale spectrum `S_first..S_last` of `n` values.
 *
 * # Safety
 * `values` must hold `n` values and `out` `cap` values.
 */
enum FsStatus fs_scale_spectrum(const double *values,
                                size_t n,
                                size_t first,
                                size_t last,
                                double *out,
                                size_t cap,
                                size_t *len_out);

/**
 * Robust power-law fit of a whole series over scales `2..=n/2`.
 *
 * # Safety
 * `s` must be a live handle; `out` must be writable.
 */
enum FsStatus fs_fit_global(const struct FsSeries *s, struct FsFit *out);

/**
 * Volatility rescaled to a horizon of `m` samples.
 */
double fs_rescale_volatility(struct FsFit fit, double m);

/**
 * Rolling estimates with default inertial range.
 *
 * # Safety
 * `s` must be a live handle; `out` must be writable.
 */
enum FsStatus fs_rolling_estimate(const struct FsSeries *s,
                                  size_t window,
                                  size_t step,
                                  struct FsTrack **out);

/**
 * # Safety
 * `t` must be null or a live handle.
 */
size_t fs_track_len(const struct FsTrack *t);

/**
 * # Safety
 * `t` must be a live handle; `out` must be writable.
 */
enum FsStatus fs_track_point(const struct FsTrack *t, size_t i, struct FsTrackPoint *out);

/**
 * # Safety
 * `t` must be null or a handle not freed before.
 */
void fs_track_free(struct FsTrack *t);

/**
 * Two-level exhaustive segmentation into `segments` parts.
 *
 * # Safety
 * `s` must be a live handle; `out` must be writable.
 */
enum FsStatus fs_segment(const struct FsSeries *s,
                         size_t segments,
                         size_t coarse,
                         size_t fine,
                         size_t min_len,
                         struct FsPartition **out);

/**
 * # Safety
 * `p` must be null or a live handle.
 */
size_t fs_partition_len(const struct FsPartition *p);

/**
 * Total residual, NaN for a null handle.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
double fs_partition_residual(const struct FsPartition *p);

/**
 * # Safety
 * `p` must be a live handle; `out` must be writable.
 */
enum FsStatus fs_partition_segment(const struct FsPartition *p, size_t i, struct FsSegment *out);

/**
 * # Safety
 * `p` must be null or a handle not freed before.
 */
void fs_partition_free(struct FsPartition *p);

/**
 * `n` interval-averaged fBm observations (first one zero) into `out`.
 *
 * # Safety
 * `out` must hold `n` values.
 */
enum FsStatus fs_sample_fbm(double hurst, double volatility, size_t n, uint64_t seed, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACSPEC_H */
