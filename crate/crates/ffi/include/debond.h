#ifndef DEBOND_H
#define DEBOND_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  DEBOND_STATUS_OK = 0,
  DEBOND_STATUS_NULL_ARGUMENT = 1,
  DEBOND_STATUS_INVALID_UTF8 = 2,
  /**
   * Input rejected: bad JSON, failed precondition or CFL.
   */
  DEBOND_STATUS_VALIDATION = 3,
  /**
   * The solver failed on valid input.
   */
  DEBOND_STATUS_NUMERICAL = 4,
  DEBOND_STATUS_BUFFER_TOO_SMALL = 5,
  DEBOND_STATUS_PANIC = 6,
} DebondStatus;

/**
 * Validated problem.
 */
typedef struct DebondProblem DebondProblem;

/**
 * Result of one dynamic run. The field is not kept.
 */
typedef struct DebondRun DebondRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failing call on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *debond_last_error(void);

/**
 * Parses and validates a problem from a NUL-terminated JSON string.
 *
 * # Safety
 * `json` must be a valid C string; `out` must be writable.
 */
DebondStatus debond_problem_from_json(const char *json, DebondProblem **out);

/**
 * # Safety
 * `problem` must come from `debond_problem_from_json` or be null.
 */
void debond_problem_free(DebondProblem *problem);

/**
 * Runs the coupled solver with default options.
 *
 * # Safety
 * `problem` must be a live handle; `out` must be writable.
 */
DebondStatus debond_solve(const DebondProblem *problem, DebondRun **out);

/**
 * # Safety
 * `run` must come from `debond_solve` or be null.
 */
void debond_run_free(DebondRun *run);

/**
 * Number of front knots.
 *
 * # Safety
 * `run` must be a live handle or null (returns 0).
 */
size_t debond_run_front_len(const DebondRun *run);

/**
 * Copies the front knots into `t` and `ell`, each of capacity `cap`.
 *
 * # Safety
 * `t` and `ell` must hold `cap` doubles.
 */
DebondStatus debond_run_front(const DebondRun *run, double *t, double *ell, size_t cap);

/**
 * Largest absolute energy-balance residual of the run.
 *
 * # Safety
 * `run` must be a live handle; `out` must be writable.
 */
DebondStatus debond_run_balance_residual(const DebondRun *run, double *out);

/**
 * Closed-form quasistatic front on the increasing grid `t[0..n]`, started
 * at `start`, written to `lambda[0..n]`.
 *
 * # Safety
 * `t` and `lambda` must hold `n` doubles.
 */
DebondStatus debond_quasistatic(const DebondProblem *problem,
                                const double *t,
                                size_t n,
                                double start,
                                double *lambda);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* DEBOND_H */
