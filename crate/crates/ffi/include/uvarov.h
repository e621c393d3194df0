#ifndef UVAROV_H
#define UVAROV_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UvarovStatus {
  UVAROV_STATUS_OK = 0,
  UVAROV_STATUS_PARSE_ERROR = 1,
  UVAROV_STATUS_BREAKDOWN = 2,
  UVAROV_STATUS_COUPLING_SINGULAR = 3,
  UVAROV_STATUS_CHECK_FAILED = 4,
  UVAROV_STATUS_INVALID_ARGUMENT = 5,
  UVAROV_STATUS_PANIC = 6,
} UvarovStatus;

/**
 * An `f64` block Gauss–Borel factorization of a Hankel moment sequence.
 */
typedef struct UvarovFactorization UvarovFactorization;

/**
 * A parsed problem description.
 */
typedef struct UvarovProblem UvarovProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *uvarov_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *uvarov_version(void);

/**
 * Parses a JSON problem description.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum UvarovStatus uvarov_problem_from_json(const char *json, struct UvarovProblem **out);

/**
 * # Safety
 * `problem` must be null or a handle from [`uvarov_problem_from_json`] not
 * yet freed.
 */
void uvarov_problem_free(struct UvarovProblem *problem);

/**
 * # Safety
 * `s` must be null or a string returned by this library not yet freed.
 */
void uvarov_string_free(char *s);

/**
 * Factorizes up to `n_max` (negative: the config's `n_max`) and writes the
 * JSON report to `*report`. The report is written for every status except
 * `INVALID_ARGUMENT` and `PANIC`.
 *
 * # Safety
 * `problem` must be a live handle and `report` a valid pointer.
 */
enum UvarovStatus uvarov_factorize(const struct UvarovProblem *problem,
                                   int64_t n_max,
                                   char **report);

/**
 * Perturbed polynomials at `degree` (negative: the config's `n_max`).
 *
 * # Safety
 * `problem` must be a live handle and `report` a valid pointer.
 */
enum UvarovStatus uvarov_transform(const struct UvarovProblem *problem,
                                   int64_t degree,
                                   bool with_oracle,
                                   char **report);

/**
 * Full theorem-vs-oracle verification up to `n_max` (negative: the config's).
 *
 * # Safety
 * `problem` must be a live handle and `report` a valid pointer.
 */
enum UvarovStatus uvarov_verify(const struct UvarovProblem *problem, int64_t n_max, char **report);

/**
 * Factorizes the Hankel moments `moments[0..count]`, each a row-major
 * `p × p` block, through degree `n_max`. `pivot_tol ≤ 0` selects the default.
 * On `BREAKDOWN` the handle is still produced and holds the degrees below
 * the failing one.
 *
 * # Safety
 * `moments` must point to `count · p · p` doubles and `out` must be valid.
 */
enum UvarovStatus uvarov_hankel_factorize_f64(size_t p,
                                              const double *moments,
                                              size_t count,
                                              size_t n_max,
                                              double pivot_tol,
                                              struct UvarovFactorization **out);

/**
 * # Safety
 * `f` must be null or a live factorization handle.
 */
void uvarov_factorization_free(struct UvarovFactorization *f);

/**
 * Number of factorized degrees (`n_max + 1` unless breakdown occurred).
 *
 * # Safety
 * `f` must be a live factorization handle.
 */
size_t uvarov_factorization_degrees(const struct UvarovFactorization *f);

/**
 * Writes `H_n` row-major into `out` (`p · p` doubles).
 *
 * # Safety
 * `f` must be a live handle and `out` must hold `out_len` doubles.
 */
enum UvarovStatus uvarov_factorization_h(const struct UvarovFactorization *f,
                                         size_t n,
                                         double *out,
                                         size_t out_len);

/**
 * Writes the coefficients of the first-family polynomial of degree `n`
 * into `out`: `n + 1` row-major `p × p` blocks in ascending powers.
 *
 * # Safety
 * `f` must be a live handle and `out` must hold `out_len` doubles.
 */
enum UvarovStatus uvarov_factorization_poly1(const struct UvarovFactorization *f,
                                             size_t n,
                                             double *out,
                                             size_t out_len);

/**
 * Second-family counterpart of [`uvarov_factorization_poly1`].
 *
 * # Safety
 * `f` must be a live handle and `out` must hold `out_len` doubles.
 */
enum UvarovStatus uvarov_factorization_poly2(const struct UvarovFactorization *f,
                                             size_t n,
                                             double *out,
                                             size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UVAROV_H */
