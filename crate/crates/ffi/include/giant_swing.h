#ifndef GIANT_SWING_H
#define GIANT_SWING_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a call.
 */
typedef enum GsStatus {
  GS_STATUS_OK = 0,
  GS_STATUS_NULL_POINTER = 1,
  GS_STATUS_INVALID_ARGUMENT = 2,
  GS_STATUS_NUMERIC_FAILURE = 3,
  GS_STATUS_PANIC = 4,
} GsStatus;

/**
 * Opaque acrobot model.
 */
typedef struct GsModel GsModel;

/**
 * Opaque result of a simulation.
 */
typedef struct GsTrajectory GsTrajectory;

/**
 * Physical parameters of the distributed-mass acrobot.
 */
typedef struct GsDistributedParams {
  double m_u;
  double m_a;
  double l_u;
  double l_a;
  double l_cu;
  double l_ca;
  double j_u;
  double j_a;
  double g;
} GsDistributedParams;

/**
 * One point of a trajectory.
 */
typedef struct GsSample {
  double t;
  double q_u;
  double q_a;
  double p_u;
  double p_a;
  /**
   * Nominal energy.
   */
  double energy;
} GsSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *gs_last_error(void);

/**
 * Point-mass acrobot with equal links.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum GsStatus gs_model_simplified(double m, double l, double g, struct GsModel **out);

/**
 * Distributed-mass acrobot; `params` null selects the reference hardware.
 *
 * # Safety
 * `params` must be null or point to a valid struct; `out` must be null or
 * valid for writes.
 */
enum GsStatus gs_model_distributed(const struct GsDistributedParams *params, struct GsModel **out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void gs_model_free(struct GsModel *model);

/**
 * Nominal energy at `(q_u, p_u)`.
 *
 * # Safety
 * `model` must be a live handle or null; `out` null or valid for writes.
 */
enum GsStatus gs_nominal_energy(const struct GsModel *model, double q_u, double p_u, double *out);

/**
 * Energy level `R̄` separating oscillations from rotations.
 *
 * # Safety
 * `model` must be a live handle or null; `out` null or valid for writes.
 */
enum GsStatus gs_critical_level(const struct GsModel *model, double *out);

/**
 * Constrained vector field `(q̇_u, ṗ_u)` written to `out[0..2]`.
 *
 * # Safety
 * `model` must be a live handle or null; `out` null or valid for two
 * writes.
 */
enum GsStatus gs_reduced_field(const struct GsModel *model,
                               double qa_bar,
                               double gain,
                               double q_u,
                               double p_u,
                               double *out);

/**
 * Integrate the constrained dynamics for `duration` seconds.
 *
 * # Safety
 * `model` must be a live handle or null; `out` null or valid for writes.
 */
enum GsStatus gs_simulate_reduced(const struct GsModel *model,
                                  double qa_bar,
                                  double gain,
                                  double q_u,
                                  double p_u,
                                  double duration,
                                  struct GsTrajectory **out);

/**
 * Number of samples; 0 for null.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t gs_trajectory_len(const struct GsTrajectory *traj);

/**
 * Copy sample `index` into `out`.
 *
 * # Safety
 * `traj` must be null or a live handle; `out` null or valid for writes.
 */
enum GsStatus gs_trajectory_sample(const struct GsTrajectory *traj,
                                   size_t index,
                                   struct GsSample *out);

/**
 * Time of the first `|q_u| = π` crossing, or a negative value if the run
 * never rotated.
 *
 * # Safety
 * `traj` must be null or a live handle; `out` null or valid for writes.
 */
enum GsStatus gs_trajectory_rotation_onset(const struct GsTrajectory *traj, double *out);

/**
 * # Safety
 * `traj` must be null or a handle not yet freed.
 */
void gs_trajectory_free(struct GsTrajectory *traj);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GIANT_SWING_H */
