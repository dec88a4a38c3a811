#ifndef CUSPWAVE_H
#define CUSPWAVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum CwStatus {
  CW_STATUS_OK = 0,
  CW_STATUS_NULL_POINTER = 1,
  CW_STATUS_INVALID_ARGUMENT = 2,
  CW_STATUS_DOMAIN = 3,
  CW_STATUS_SINGULARITY = 4,
  CW_STATUS_ACCURACY = 5,
  CW_STATUS_ALIASING = 6,
  CW_STATUS_CONVERGENCE = 7,
  CW_STATUS_NEAR_SINGULAR = 8,
  CW_STATUS_INSUFFICIENT_DATA = 9,
  CW_STATUS_UNSUPPORTED = 10,
  CW_STATUS_CONFIG = 11,
  CW_STATUS_IO = 12,
  /**
   * The output buffer is too small.
   */
  CW_STATUS_BUFFER_TOO_SMALL = 13,
  CW_STATUS_PANIC = 14,
  CW_STATUS_OTHER = 15,
} CwStatus;

typedef enum CwKind {
  CW_KIND_ABS = 0,
  CW_KIND_SGN = 1,
} CwKind;

typedef enum CwTermination {
  CW_TERMINATION_CREST_REACHED = 0,
  CW_TERMINATION_STEP_FLOOR = 1,
  CW_TERMINATION_MAX_STEPS = 2,
  CW_TERMINATION_ERROR = 3,
} CwTermination;

/**
 * Points of a followed branch.
 */
typedef struct CwBranch CwBranch;

/**
 * Discretised steady problem with a negative-order symbol.
 */
typedef struct CwProblem CwProblem;

/**
 * Scalar fields of one branch point.
 */
typedef struct CwPoint {
  double s;
  double c;
  double max_value;
  double mu_eps;
  double residual_norm;
} CwPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buffer` (NUL
 * terminated) and returns the length it needs including the NUL; 0 when
 * there is no error. Nothing is written when `capacity` is too small.
 *
 * # Safety
 * `buffer` must be null or point to `capacity` writable bytes.
 */
size_t cw_last_error_message(char *buffer, size_t capacity);

/**
 * `K_α(x)` by quadrature, with its error estimate.
 *
 * # Safety
 * `value` and `error` must be valid for writes.
 */
enum CwStatus cw_kernel_eval(double alpha, double x, double *value, double *error);

/**
 * `‖K_α‖₁`.
 *
 * # Safety
 * `value` must be valid for writes.
 */
enum CwStatus cw_kernel_l1_norm(double alpha, double *value);

/**
 * Creates a problem with symbol `|k|^{-α}`, `m` modes and `n` grid nodes.
 *
 * # Safety
 * `out` must be valid for writes; the handle is released with
 * [`cw_problem_free`].
 */
enum CwStatus cw_problem_new(double alpha,
                             enum CwKind kind,
                             double p,
                             double eps,
                             size_t m,
                             size_t n,
                             struct CwProblem **out);

/**
 * Releases a problem; null is ignored.
 *
 * # Safety
 * `problem` must come from [`cw_problem_new`] and not be used afterwards.
 */
void cw_problem_free(struct CwProblem *problem);

/**
 * Follows branch `k` with default controls except the crest margin.
 *
 * # Safety
 * `problem` must be a live handle and `out` valid for writes; the branch is
 * released with [`cw_branch_free`].
 */
enum CwStatus cw_branch_follow(const struct CwProblem *problem,
                               size_t k,
                               double crest_margin,
                               struct CwBranch **out);

/**
 * Number of points on the branch; 0 for null.
 *
 * # Safety
 * `branch` must be null or a live handle.
 */
size_t cw_branch_len(const struct CwBranch *branch);

/**
 * Why the branch stopped.
 *
 * # Safety
 * `branch` must be a live handle and `out` valid for writes.
 */
enum CwStatus cw_branch_termination(const struct CwBranch *branch, enum CwTermination *out);

/**
 * Scalar summary of point `index`.
 *
 * # Safety
 * `branch` must be a live handle and `out` valid for writes.
 */
enum CwStatus cw_branch_point(const struct CwBranch *branch, size_t index, struct CwPoint *out);

/**
 * Grid values of point `index` on `problem`'s grid, written to `values`.
 *
 * # Safety
 * `problem` and `branch` must be live handles and `values` must point to
 * `len` writable doubles; `len` must equal the grid size.
 */
enum CwStatus cw_branch_wave(const struct CwProblem *problem,
                             const struct CwBranch *branch,
                             size_t index,
                             double *values,
                             size_t len);

/**
 * Releases a branch; null is ignored.
 *
 * # Safety
 * `branch` must come from [`cw_branch_follow`] and not be used afterwards.
 */
void cw_branch_free(struct CwBranch *branch);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cw_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CUSPWAVE_H */
