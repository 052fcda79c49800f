#ifndef NHSL_H
#define NHSL_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes; 1 to 4 match the exit codes of the `nhsl` binary.
 */
typedef enum NhslStatus {
  NHSL_STATUS_OK = 0,
  NHSL_STATUS_CONFIG = 1,
  NHSL_STATUS_LATTICE = 2,
  NHSL_STATUS_SPARSE = 3,
  NHSL_STATUS_WEIGHTS = 4,
  NHSL_STATUS_NULL_POINTER = 5,
  NHSL_STATUS_INVALID_UTF8 = 6,
  NHSL_STATUS_PANIC = 7,
} NhslStatus;

typedef struct NhslLattice NhslLattice;

typedef struct NhslMeasure NhslMeasure;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *nhsl_last_error(void);

/**
 * Atoms from parallel arrays. A `floor` that is not positive selects the
 * default resolution floor.
 *
 * # Safety
 * `positions` and `masses` point to `len` values; `out` is writable.
 */
enum NhslStatus nhsl_measure_new(const double *positions,
                                 const double *masses,
                                 size_t len,
                                 double floor,
                                 struct NhslMeasure **out);

/**
 * Measure from the JSON measure format.
 *
 * # Safety
 * `json` is a NUL-terminated string; `out` is writable.
 */
enum NhslStatus nhsl_measure_from_json(const char *json, struct NhslMeasure **out);

/**
 * Number of atoms; 0 for null.
 *
 * # Safety
 * `measure` is null or a live handle.
 */
size_t nhsl_measure_len(const struct NhslMeasure *measure);

/**
 * # Safety
 * `measure` is null or a live handle.
 */
double nhsl_measure_total_mass(const struct NhslMeasure *measure);

/**
 * # Safety
 * `measure` is null or a handle not yet freed.
 */
void nhsl_measure_free(struct NhslMeasure *measure);

/**
 * Builds the lattice; `lambda_json` may be null.
 *
 * # Safety
 * `measure` is a live handle, strings are NUL-terminated, `out` is writable.
 */
enum NhslStatus nhsl_lattice_build(const struct NhslMeasure *measure,
                                   const char *params_json,
                                   const char *lambda_json,
                                   struct NhslLattice **out);

/**
 * # Safety
 * `lattice` is null or a live handle.
 */
size_t nhsl_lattice_levels(const struct NhslLattice *lattice);

/**
 * # Safety
 * `lattice` is null or a live handle.
 */
size_t nhsl_lattice_cells(const struct NhslLattice *lattice);

/**
 * Runs the invariant suite.
 *
 * # Safety
 * `lattice` is a live handle and `pass` is writable.
 */
enum NhslStatus nhsl_lattice_check(const struct NhslLattice *lattice, bool *pass);

/**
 * JSON serialization; release with [`nhsl_string_free`].
 *
 * # Safety
 * `lattice` is a live handle and `out` is writable.
 */
enum NhslStatus nhsl_lattice_to_json(const struct NhslLattice *lattice, char **out);

/**
 * # Safety
 * `lattice` is null or a handle not yet freed.
 */
void nhsl_lattice_free(struct NhslLattice *lattice);

/**
 * # Safety
 * `s` is null or a string returned by this library and not yet freed.
 */
void nhsl_string_free(char *s);

/**
 * Selects sparse families for `f` from the lattice root and certifies the
 * pointwise bound, writing `c*` and the number of violating atoms.
 *
 * # Safety
 * `lattice` is a live handle, `kernel_json` is NUL-terminated, `f` points to
 * `len` values and the outputs are writable.
 */
enum NhslStatus nhsl_certify(const struct NhslLattice *lattice,
                             const char *kernel_json,
                             const double *f,
                             size_t len,
                             double *c_star,
                             size_t *violations);

/**
 * Cell characteristic of the weight `w` with exponent `p`.
 *
 * # Safety
 * `lattice` is a live handle, `w` points to `len` values, `out` is writable.
 */
enum NhslStatus nhsl_cell_characteristic(const struct NhslLattice *lattice,
                                         const double *w,
                                         size_t len,
                                         double p,
                                         double *out);

/**
 * Library version, static.
 */
const char *nhsl_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NHSL_H */
