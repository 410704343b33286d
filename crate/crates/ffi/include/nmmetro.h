#ifndef NMMETRO_H
#define NMMETRO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NmStatus {
  NM_STATUS_OK = 0,
  NM_STATUS_NULL_POINTER = 1,
  NM_STATUS_INVALID_ARGUMENT = 2,
  NM_STATUS_BUFFER_TOO_SMALL = 3,
  NM_STATUS_NUMERICAL = 4,
  NM_STATUS_PANIC = 5,
} NmStatus;

/**
 * Estimation parameter selector for [`nm_trajectory_qfi`].
 */
typedef enum NmParameter {
  NM_PARAMETER_TIME = 0,
  NM_PARAMETER_RABI = 1,
  NM_PARAMETER_WIDTH = 2,
  NM_PARAMETER_PHASE = 3,
} NmParameter;

/**
 * Opaque model handle.
 */
typedef struct NmModel NmModel;

/**
 * Opaque trajectory handle. Carries sensitivity tracks for every parameter.
 */
typedef struct NmTrajectory NmTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *nm_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`). Returns the full message length in
 * bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t nm_last_error_message(char *buf, size_t len);

/**
 * Creates a model. On success `*out` owns a handle for [`nm_model_free`].
 *
 * # Safety
 * `out` must be null or a valid pointer to writable storage.
 */
enum NmStatus nm_model_new(double a1,
                           double a2,
                           double rabi,
                           double lambda,
                           double horizon,
                           struct NmModel **out);

/**
 * # Safety
 * `model` must be null or a handle from [`nm_model_new`] not yet freed.
 */
void nm_model_free(struct NmModel *model);

/**
 * Propagates the state `(s, phi)` under a piecewise-constant pulse of
 * `n_segments` amplitudes (`amplitudes` may be null when `n_segments` is 0,
 * meaning no field) and samples `grid_points + 1` times over the horizon.
 *
 * # Safety
 * `model` must be a live handle, `amplitudes` must point to `n_segments`
 * doubles, and `out` must be writable.
 */
enum NmStatus nm_propagate(const struct NmModel *model,
                           double s,
                           double phi,
                           const double *amplitudes,
                           size_t n_segments,
                           size_t grid_points,
                           struct NmTrajectory **out);

/**
 * Number of samples, or 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t nm_trajectory_len(const struct NmTrajectory *traj);

/**
 * # Safety
 * `traj` must be a live handle and `out` must hold `len` doubles.
 */
enum NmStatus nm_trajectory_times(const struct NmTrajectory *traj, double *out, size_t len);

/**
 * Quantum Fisher information for `param` at every sample.
 *
 * # Safety
 * `traj` must be a live handle and `out` must hold `len` doubles.
 */
enum NmStatus nm_trajectory_qfi(const struct NmTrajectory *traj,
                                enum NmParameter param,
                                double *out,
                                size_t len);

/**
 * Concurrence at every sample.
 *
 * # Safety
 * `traj` must be a live handle and `out` must hold `len` doubles.
 */
enum NmStatus nm_trajectory_concurrence(const struct NmTrajectory *traj, double *out, size_t len);

/**
 * # Safety
 * `traj` must be null or a handle from [`nm_propagate`] not yet freed.
 */
void nm_trajectory_free(struct NmTrajectory *traj);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NMMETRO_H */
