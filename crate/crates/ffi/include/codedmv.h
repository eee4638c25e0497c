#ifndef CODEDMV_H
#define CODEDMV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CodedmvStatus {
  CODEDMV_STATUS_OK = 0,
  CODEDMV_STATUS_NULL_POINTER = 1,
  CODEDMV_STATUS_INVALID_UTF8 = 2,
  CODEDMV_STATUS_CONFIG_ERROR = 3,
  CODEDMV_STATUS_CERTIFICATION_FAILED = 4,
  CODEDMV_STATUS_INFEASIBLE = 5,
  CODEDMV_STATUS_SHAPE_MISMATCH = 6,
  CODEDMV_STATUS_INTERNAL = 7,
} CodedmvStatus;

/**
 * Opaque generator collection.
 */
typedef struct CodedmvCollection CodedmvCollection;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread; empty after a
 * success. The pointer stays valid until the next library call on the
 * same thread.
 */
const char *codedmv_last_error(void);

/**
 * Builds a collection from a NUL-terminated scheme-config JSON string.
 *
 * # Safety
 * `config_json` must be a valid C string and `out` a valid pointer.
 */
enum CodedmvStatus codedmv_collection_from_config(const char *config_json,
                                                  struct CodedmvCollection **out);

/**
 * Releases a collection. Null is ignored.
 *
 * # Safety
 * `coll` must come from `codedmv_collection_from_config` and not be used
 * afterwards.
 */
void codedmv_collection_free(struct CodedmvCollection *coll);

/**
 * Writes N, Δ, ℓ and s. Any output pointer may be null.
 *
 * # Safety
 * `coll` must be a live handle; non-null outputs must be writable.
 */
enum CodedmvStatus codedmv_collection_shape(const struct CodedmvCollection *coll,
                                            size_t *n_workers,
                                            size_t *delta,
                                            size_t *ell,
                                            size_t *s);

/**
 * Fraction of nonzero generator entries.
 *
 * # Safety
 * `coll` must be a live handle and `out` writable.
 */
enum CodedmvStatus codedmv_collection_density(const struct CodedmvCollection *coll, double *out);

/**
 * Certifies full rank over every pattern. `*passed` is 1 or 0; a failing
 * verdict still returns `Ok` and the failing pattern is in
 * `codedmv_last_error`.
 *
 * # Safety
 * `coll` must be a live handle and `passed` writable.
 */
enum CodedmvStatus codedmv_certify(const struct CodedmvCollection *coll,
                                   int full_mode,
                                   int strict,
                                   int *passed);

/**
 * Runs the analyzer and returns the report as a JSON string.
 *
 * # Safety
 * `coll` must be a live handle and `out_json` writable. Free the result
 * with `codedmv_string_free`.
 */
enum CodedmvStatus codedmv_analyze_json(const struct CodedmvCollection *coll,
                                        int full_mode,
                                        int strict,
                                        char **out_json);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void codedmv_string_free(char *s);

/**
 * Encodes row-major `a` (`rows`×`cols`), runs the workers with the given
 * per-worker product budgets (N of them), decodes, and writes `A·x` into
 * `out_ax` (`rows` values). `out_residual` and `out_kappa` may be null.
 *
 * # Safety
 * All array pointers must be valid for the stated lengths.
 */
enum CodedmvStatus codedmv_multiply(const struct CodedmvCollection *coll,
                                    const double *a,
                                    size_t rows,
                                    size_t cols,
                                    const double *x,
                                    const size_t *budgets,
                                    size_t n_budgets,
                                    double *out_ax,
                                    double *out_residual,
                                    double *out_kappa);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CODEDMV_H */
