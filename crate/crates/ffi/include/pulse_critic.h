#ifndef PULSE_CRITIC_H
#define PULSE_CRITIC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PcStatus {
  PC_STATUS_OK = 0,
  PC_STATUS_NULL_POINTER = 1,
  PC_STATUS_INVALID_ARGUMENT = 2,
  PC_STATUS_INVALID_SUPPORT = 3,
  PC_STATUS_ROOT_SOLVE_FAILURE = 4,
  PC_STATUS_RESOLUTION_ERROR = 5,
  PC_STATUS_INVALID_GRID = 6,
  PC_STATUS_RUN_FAILURE = 7,
  PC_STATUS_NO_VALUE = 8,
  PC_STATUS_BUFFER_TOO_SMALL = 9,
  PC_STATUS_PANIC = 10,
} PcStatus;

typedef enum PcVerdict {
  PC_VERDICT_GLOBAL = 0,
  PC_VERDICT_BLOWUP = 1,
  PC_VERDICT_INCONCLUSIVE = 2,
} PcVerdict;

/**
 * Sampled initial data at `t = 1`.
 */
typedef struct PcData PcData;

/**
 * A finished run.
 */
typedef struct PcOutcome PcOutcome;

/**
 * Data parameters for [`pc_data_new`].
 */
typedef struct PcDataParams {
  uint32_t p;
  double eps0;
  double delta;
  double center;
  double width;
  double amplitude;
  /**
   * Cell count; 0 picks 64 cells across `delta`.
   */
  size_t grid_n;
  /**
   * Outer radius; 0 picks what a run to `t_max` needs.
   */
  double r_max;
  double t_max;
} PcDataParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds constrained short-pulse data and stores a handle in `*out`.
 *
 * # Safety
 * `params` must point to a valid `PcDataParams`; `out` must be writable.
 */
enum PcStatus pc_data_new(const struct PcDataParams *params, struct PcData **out);

/**
 * Number of grid points, or 0 for a null handle.
 *
 * # Safety
 * `data` must be null or a live handle from [`pc_data_new`].
 */
size_t pc_data_len(const struct PcData *data);

/**
 * Copies radii, `phi` and `phi_t` into caller buffers of length `len`.
 * Any output pointer may be null to skip it.
 *
 * # Safety
 * Non-null buffers must hold `len` doubles.
 */
enum PcStatus pc_data_copy(const struct PcData *data,
                           double *r,
                           double *phi,
                           double *phit,
                           size_t len);

/**
 * Outgoing-constraint residuals of the sampled data.
 *
 * # Safety
 * `data` must be a live handle; `res1` and `res2` must be writable.
 */
enum PcStatus pc_data_constraint(const struct PcData *data, double *res1, double *res2);

/**
 * # Safety
 * `data` must be null or a handle from [`pc_data_new`] not yet freed.
 */
void pc_data_free(struct PcData *data);

/**
 * Evolves the data to its `t_max`, tracking geometry when `geometry` is
 * nonzero.
 *
 * # Safety
 * `data` must be a live handle; `out` must be writable.
 */
enum PcStatus pc_run(const struct PcData *data, int32_t geometry, struct PcOutcome **out);

/**
 * # Safety
 * `outcome` must be a live handle from [`pc_run`].
 */
enum PcStatus pc_outcome_verdict(const struct PcOutcome *outcome, enum PcVerdict *verdict);

/**
 * First breakdown time; [`PcStatus::NoValue`] when the run did not break down.
 *
 * # Safety
 * `outcome` must be a live handle; `value` must be writable.
 */
enum PcStatus pc_outcome_t_star(const struct PcOutcome *outcome, double *value);

/**
 * Final time reached.
 *
 * # Safety
 * `outcome` must be a live handle; `value` must be writable.
 */
enum PcStatus pc_outcome_t_final(const struct PcOutcome *outcome, double *value);

/**
 * Smallest `mu` along the tracked characteristics.
 *
 * # Safety
 * `outcome` must be a live handle; `value` must be writable.
 */
enum PcStatus pc_outcome_mu_min(const struct PcOutcome *outcome, double *value);

/**
 * Decay exponent of `sup |d phi|` for global runs.
 *
 * # Safety
 * `outcome` must be a live handle; `value` must be writable.
 */
enum PcStatus pc_outcome_decay_exponent(const struct PcOutcome *outcome, double *value);

/**
 * # Safety
 * `outcome` must be null or a handle from [`pc_run`] not yet freed.
 */
void pc_outcome_free(struct PcOutcome *outcome);

/**
 * Copies the calling thread's last error message, NUL-terminated and
 * truncated to `len` bytes. Returns the full message length.
 *
 * # Safety
 * `buf` must be null or hold `len` bytes.
 */
size_t pc_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PULSE_CRITIC_H */
