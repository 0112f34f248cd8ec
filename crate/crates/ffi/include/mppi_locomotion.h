#ifndef MPPI_LOCOMOTION_H
#define MPPI_LOCOMOTION_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum MppiStatus {
  MPPI_STATUS_OK = 0,
  MPPI_STATUS_NULL_POINTER = 1,
  MPPI_STATUS_INVALID_UTF8 = 2,
  MPPI_STATUS_DOMAIN = 3,
  MPPI_STATUS_INVALID_TRAJECTORY = 4,
  MPPI_STATUS_CONFIG = 5,
  MPPI_STATUS_OUT_OF_BOUNDS = 6,
  MPPI_STATUS_DIMENSION_MISMATCH = 7,
  MPPI_STATUS_PLANNING_FAILURE = 8,
  MPPI_STATUS_IO = 9,
  MPPI_STATUS_SERIALIZATION = 10,
  /**
   * The robot fell during the last simulated step.
   */
  MPPI_STATUS_ROBOT_FAILED = 11,
  MPPI_STATUS_PANIC = 99,
} MppiStatus;

/**
 * Opaque receding-horizon controller bound to a simulated plant.
 */
typedef struct MppiController MppiController;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *mppi_last_error_message(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void mppi_string_free(char *s);

/**
 * Builds a controller from TOML config text (NULL selects the quadruped
 * walking defaults) with the given sampling seed.
 *
 * # Safety
 * `config_toml` must be NULL or a NUL-terminated string; `out` must be writable.
 */
enum MppiStatus mppi_controller_new(const char *config_toml,
                                    uint64_t seed,
                                    struct MppiController **out);

/**
 * Destroys a controller. NULL is ignored.
 *
 * # Safety
 * `controller` must come from [`mppi_controller_new`] and not be used afterwards.
 */
void mppi_controller_free(struct MppiController *controller);

/**
 * Sizes of the generalized position, velocity and joint command vectors.
 *
 * # Safety
 * `controller` must be a live handle; the out pointers must be writable.
 */
enum MppiStatus mppi_controller_dims(struct MppiController *controller,
                                     size_t *position_dim,
                                     size_t *velocity_dim,
                                     size_t *control_dim);

/**
 * Returns to the initial state and the standing warm start.
 *
 * # Safety
 * `controller` must be a live handle.
 */
enum MppiStatus mppi_controller_reset(struct MppiController *controller);

/**
 * Overwrites the controller's state, e.g. with a measurement from another simulator.
 *
 * # Safety
 * `controller` must be a live handle; the arrays must hold the given lengths.
 */
enum MppiStatus mppi_controller_set_state(struct MppiController *controller,
                                          double time,
                                          const double *position,
                                          size_t position_len,
                                          const double *velocity,
                                          size_t velocity_len);

/**
 * Copies the controller's current state out.
 *
 * # Safety
 * `controller` must be a live handle; the arrays must hold the given lengths.
 */
enum MppiStatus mppi_controller_get_state(struct MppiController *controller,
                                          double *time,
                                          double *position,
                                          size_t position_len,
                                          double *velocity,
                                          size_t velocity_len);

/**
 * Plans from the current state and writes the first PD targets and the
 * best rollout cost. The state is not advanced.
 *
 * # Safety
 * `controller` must be a live handle; `q_des`/`v_des` must hold `len` values.
 */
enum MppiStatus mppi_controller_plan(struct MppiController *controller,
                                     double *q_des,
                                     double *v_des,
                                     size_t len,
                                     double *cost);

/**
 * Plans, then simulates one control step of the first command on the
 * controller's own plant. Returns `RobotFailed` when the robot falls.
 *
 * # Safety
 * `controller` must be a live handle.
 */
enum MppiStatus mppi_controller_step(struct MppiController *controller);

/**
 * Evaluates a spline through `node_count` uniformly spaced nodes at time `t`.
 *
 * `positions` and `velocities` are node-major (`node_count x dof`). `kind` is
 * 0 for Hermite, 1 for natural cubic, 2 for quadratic.
 *
 * # Safety
 * Input arrays must hold `node_count * dof` values and outputs `dof` values.
 */
enum MppiStatus mppi_spline_evaluate(uint32_t kind,
                                     double start_time,
                                     double spacing,
                                     size_t node_count,
                                     size_t dof,
                                     const double *positions,
                                     const double *velocities,
                                     double t,
                                     double *out_position,
                                     double *out_velocity);

/**
 * Normalized sampling weights of `len` rollout costs at `temperature`.
 *
 * # Safety
 * `costs` and `out_weights` must hold `len` values.
 */
enum MppiStatus mppi_compute_weights(const double *costs,
                                     size_t len,
                                     double temperature,
                                     double *out_weights);

/**
 * Runs the closed-loop experiment described by `config_toml` for every
 * configured seed and returns the run summaries as a JSON array.
 *
 * # Safety
 * `config_toml` must be NULL or NUL-terminated; `out_json` must be writable.
 * The returned string must be released with [`mppi_string_free`].
 */
enum MppiStatus mppi_run_experiment(const char *config_toml, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MPPI_LOCOMOTION_H */
