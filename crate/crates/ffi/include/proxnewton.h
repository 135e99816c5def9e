#ifndef PROXNEWTON_H
#define PROXNEWTON_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of an interface call.
 */
typedef enum PnError {
  PN_ERROR_OK = 0,
  PN_ERROR_NULL_POINTER = 1,
  PN_ERROR_INVALID_ARGUMENT = 2,
  /**
   * A matrix that must be positive definite is not.
   */
  PN_ERROR_NOT_POSITIVE_DEFINITE = 3,
  PN_ERROR_IO = 4,
  /**
   * Internal failure; the message has details.
   */
  PN_ERROR_INTERNAL = 5,
} PnError;

typedef enum PnMethod {
  PN_METHOD_PROX_NEWTON = 0,
  PN_METHOD_PROX_BFGS = 1,
  PN_METHOD_PROX_LBFGS = 2,
  PN_METHOD_FISTA = 3,
  PN_METHOD_SPARSA = 4,
} PnMethod;

typedef enum PnPolicy {
  PN_POLICY_ADAPTIVE = 0,
  PN_POLICY_EXACT = 1,
  PN_POLICY_FIXED_ITERATIONS = 2,
} PnPolicy;

typedef enum PnProblemKind {
  PN_PROBLEM_KIND_LASSO = 0,
  PN_PROBLEM_KIND_LOGISTIC = 1,
  PN_PROBLEM_KIND_INVERSE_COVARIANCE = 2,
} PnProblemKind;

/**
 * Outcome of a solve.
 */
typedef enum PnSolveStatus {
  PN_SOLVE_STATUS_CONVERGED = 0,
  PN_SOLVE_STATUS_MAX_ITERATIONS = 2,
  PN_SOLVE_STATUS_LINE_SEARCH_FAILED = 3,
} PnSolveStatus;

/**
 * Opaque problem handle.
 */
typedef struct PnProblem PnProblem;

/**
 * Opaque solve report handle.
 */
typedef struct PnReport PnReport;

/**
 * Solver settings. Initialize with [`pn_options_default`].
 */
typedef struct PnOptions {
  enum PnMethod method;
  /**
   * L-BFGS memory; used with `ProxLbfgs` only.
   */
  size_t lbfgs_memory;
  enum PnPolicy policy;
  /**
   * Inner iteration count for `FixedIterations`.
   */
  size_t fixed_count;
  double tol;
  size_t max_outer;
  /**
   * Sufficient-decrease constant of the line search.
   */
  double alpha;
  uint64_t seed;
  /**
   * Nonzero to record wall-clock times in the trace.
   */
  int record_clock;
} PnOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or NULL. Valid until the next call
 * into this library from the same thread.
 */
const char *pn_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pn_version(void);

/**
 * Fills `out` with the default settings (ProxNewton, adaptive stopping,
 * tol 1e-8, 500 outer iterations).
 */
enum PnError pn_options_default(struct PnOptions *out);

/**
 * Lasso `||Ax - b||² / 2 + lambda ||x||_1`; `a` is `rows × cols`, row-major.
 */
enum PnError pn_problem_lasso(const double *a,
                              size_t rows,
                              size_t cols,
                              const double *b,
                              double lambda,
                              struct PnProblem **out);

/**
 * ℓ1-regularized logistic regression; `x` is `rows × cols` row-major,
 * `y` holds labels in `{0,1}` or `{-1,+1}`.
 */
enum PnError pn_problem_logistic(const double *x,
                                 size_t rows,
                                 size_t cols,
                                 const double *y,
                                 double lambda,
                                 double ridge,
                                 struct PnProblem **out);

/**
 * Sparse inverse covariance estimation from an `order × order` sample
 * covariance (row-major). The iterate is the row-major vectorized matrix.
 */
enum PnError pn_problem_inverse_covariance(const double *sigma,
                                           size_t order,
                                           double lambda,
                                           struct PnProblem **out);

/**
 * Seeded synthetic instance: `n` features (matrix order for inverse
 * covariance) and `s` samples. `ridge` applies to logistic only.
 */
enum PnError pn_problem_synthetic(enum PnProblemKind kind,
                                  uint64_t seed,
                                  size_t n,
                                  size_t s,
                                  double lambda,
                                  double ridge,
                                  struct PnProblem **out);

/**
 * Number of unknowns, or 0 for NULL.
 */
size_t pn_problem_dim(const struct PnProblem *problem);

/**
 * Releases a problem. NULL is ignored.
 */
void pn_problem_free(struct PnProblem *problem);

/**
 * Runs the solver. `options` may be NULL for the defaults. On success
 * `*out` receives a report to be released with [`pn_report_free`]; a
 * solve that stops without converging is still a success, see
 * [`pn_report_status`].
 */
enum PnError pn_solve(const struct PnProblem *problem,
                      const struct PnOptions *options,
                      struct PnReport **out);

/**
 * Status of a finished solve; `LineSearchFailed` for NULL.
 */
enum PnSolveStatus pn_report_status(const struct PnReport *report);

size_t pn_report_iterations(const struct PnReport *report);

/**
 * Final objective value; NaN for NULL.
 */
double pn_report_objective(const struct PnReport *report);

/**
 * Final optimality measure `||G_f(x)||`; NaN for NULL.
 */
double pn_report_optimality(const struct PnReport *report);

/**
 * Copies the final iterate into `buf`, which must hold `len` values with
 * `len` equal to the problem dimension.
 */
enum PnError pn_report_solution(const struct PnReport *report, double *buf, size_t len);

/**
 * Writes the trace CSV to `path` and a JSON summary next to it (`.json`
 * extension).
 */
enum PnError pn_report_write_trace(const struct PnReport *report, const char *path);

/**
 * Releases a report. NULL is ignored.
 */
void pn_report_free(struct PnReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROXNEWTON_H */
