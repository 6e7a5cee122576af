#ifndef SKEWCRIT_H
#define SKEWCRIT_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum SkcStatus {
  SKC_STATUS_OK = 0,
  SKC_STATUS_NULL_ARGUMENT = 1,
  SKC_STATUS_INVALID_UTF8 = 2,
  SKC_STATUS_CONFIG_ERROR = 3,
  SKC_STATUS_DIMENSION_MISMATCH = 4,
  SKC_STATUS_BUFFER_TOO_SMALL = 5,
  SKC_STATUS_DEGENERATE_HESSIAN = 6,
  SKC_STATUS_NOT_CONVERGED = 7,
  SKC_STATUS_HYPOTHESIS_VIOLATED = 8,
  SKC_STATUS_NUMERICAL_ERROR = 9,
  SKC_STATUS_CHECK_FAILED = 10,
  SKC_STATUS_PANIC = 11,
} SkcStatus;

// Which acceptance criteria `skc_verify` runs.
typedef enum SkcSuite {
  SKC_SUITE_ALL = 0,
  SKC_SUITE_SOLVER = 1,
  SKC_SUITE_CONTACT = 2,
  SKC_SUITE_VARIATION = 3,
} SkcSuite;

// Opaque compiled problem.
typedef struct SkcProblem SkcProblem;

typedef struct SkcDims {
  size_t n;
  size_t m;
  size_t d;
  // Nonzero when the config holds two problems joined by `t`.
  int32_t is_family;
} SkcDims;

typedef struct SkcSolveInfo {
  uint32_t iterations;
  int32_t converged;
  double final_residual;
  double hessian_condition;
} SkcSolveInfo;

typedef struct SkcContactInfo {
  // Fitted slope, NaN when machine-limited.
  double slope;
  int32_t machine_limited;
  int32_t passed;
} SkcContactInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *skc_version(void);

// Copies the last error message of this thread into `buf`, truncating if
// needed. Returns the full message length without the terminating NUL, or 0
// when no error has been recorded.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t skc_last_error(char *buf, size_t len);

// Compiles a JSON config into a problem handle.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be a valid pointer.
enum SkcStatus skc_problem_from_json(const char *json, struct SkcProblem **out);

// Loads one of the shipped example configs by name.
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be a valid pointer.
enum SkcStatus skc_problem_from_example(const char *name, struct SkcProblem **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `p` must come from one of the constructors and not be freed twice.
void skc_problem_free(struct SkcProblem *p);

// # Safety
// `p` must be a live handle and `out` a valid pointer.
enum SkcStatus skc_problem_dims(const struct SkcProblem *p, struct SkcDims *out);

// Newton solve for the critical point over `y`. `x0` may be null to use the
// config's starting point. For families the `t = 0` problem is solved.
//
// # Safety
// Array arguments must hold the stated number of doubles.
enum SkcStatus skc_solve(const struct SkcProblem *p,
                         const double *y,
                         size_t y_len,
                         const double *x0,
                         size_t x0_len,
                         double *x_out,
                         size_t x_out_len,
                         struct SkcSolveInfo *info);

// Measures the contact order of the two solution families over `y` and
// writes the `r`-residual (length `n`) to `residual_out`.
//
// # Safety
// Array arguments must hold the stated number of doubles.
enum SkcStatus skc_gamma_contact(const struct SkcProblem *p,
                                 const double *y,
                                 size_t y_len,
                                 uint32_t r,
                                 double *residual_out,
                                 size_t residual_len,
                                 struct SkcContactInfo *info);

// Predicts the `r`-residual of the solution family from the data residuals
// alone, without solving the perturbed problems.
//
// # Safety
// Array arguments must hold the stated number of doubles.
enum SkcStatus skc_predict_residual(const struct SkcProblem *p,
                                    const double *y,
                                    size_t y_len,
                                    uint32_t r,
                                    double *out,
                                    size_t out_len,
                                    double *condition);

// Runs the acceptance criteria against the built-in configs. When
// `report_json` is non-null it receives the JSON report (no timestamp),
// to be released with `skc_string_free`. Returns `CheckFailed` when any
// criterion fails.
//
// # Safety
// `report_json` must be null or a valid pointer.
enum SkcStatus skc_verify(enum SkcSuite suite, uint64_t seed, char **report_json);

// Releases a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void skc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKEWCRIT_H */
