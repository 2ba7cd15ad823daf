#ifndef SPECTRA_LAB_H
#define SPECTRA_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_INVALID_ARGUMENT = 2,
  SL_STATUS_INVALID_UTF8 = 3,
  SL_STATUS_TOO_LARGE = 4,
  SL_STATUS_NO_CONVERGENCE = 5,
  SL_STATUS_IO = 6,
  SL_STATUS_PANIC = 7,
} SlStatus;

typedef enum SlNegation {
  SL_NEGATION_NONE = 0,
  SL_NEGATION_CONSTRAINT = 1,
  SL_NEGATION_VARIABLE = 2,
} SlNegation;

typedef struct SlAtom SlAtom;

typedef struct SlInstance SlInstance;

/**
 * Bounds from `sl_sdp_sandwich`. `opt` and `formula` are NaN when not
 * available (too many vertices for brute force, or `c < 2`).
 */
typedef struct SlSandwich {
  double opt;
  double sdp_lower;
  double sdp_upper;
  double formula;
  uintptr_t bad_vertex_count;
  double tail_mass;
} SlSandwich;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Free with
 * [`sl_string_free`].
 */
char *sl_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void sl_string_free(char *s);

/**
 * Parses `edge`, `sort4`, `chsh`, `complete:R` or `forrelation:K`.
 *
 * # Safety
 * `token` must be a NUL-terminated string and `out` a writable pointer.
 */
enum SlStatus sl_atom_from_token(const char *token, struct SlAtom **out);

/**
 * Builds an atom from an `r×r` row-major table of weights in {−1, 0, 1}.
 *
 * # Safety
 * `weights` must point to `r*r` readable bytes and `out` be writable.
 */
enum SlStatus sl_atom_from_weights(uintptr_t r, const int8_t *weights, struct SlAtom **out);

/**
 * # Safety
 * `atom` must be NULL or a live handle from this library.
 */
void sl_atom_free(struct SlAtom *atom);

/**
 * # Safety
 * `atom` must be a live handle; the out pointers must be writable.
 */
enum SlStatus sl_atom_info(const struct SlAtom *atom,
                           uintptr_t *r,
                           double *lambda1,
                           double *lambda2);

/**
 * Random `n`-lift with `c` copies of `atom`.
 *
 * # Safety
 * `atom` must be a live handle and `out` writable.
 */
enum SlStatus sl_instance_random(const struct SlAtom *atom,
                                 uintptr_t c,
                                 uintptr_t n,
                                 uint64_t seed,
                                 enum SlNegation negation,
                                 struct SlInstance **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum SlStatus sl_instance_from_json(const char *json, struct SlInstance **out);

/**
 * Serializes the instance; free the result with [`sl_string_free`].
 *
 * # Safety
 * `inst` must be a live handle and `out` writable.
 */
enum SlStatus sl_instance_to_json(const struct SlInstance *inst, char **out);

/**
 * # Safety
 * `inst` must be NULL or a live handle from this library.
 */
void sl_instance_free(struct SlInstance *inst);

/**
 * # Safety
 * `inst` must be a live handle; the out pointers must be writable.
 */
enum SlStatus sl_instance_size(const struct SlInstance *inst,
                               uintptr_t *vertices,
                               uintptr_t *edges);

/**
 * Relative residual of the determinant identity at `t`.
 *
 * # Safety
 * `inst` must be a live handle and `out` writable.
 */
enum SlStatus sl_ihara_residual(const struct SlInstance *inst, double t, double *out);

/**
 * Spectral radii of the adjacency matrix and of the nomadic operator.
 *
 * # Safety
 * `inst` must be a live handle; the out pointers must be writable.
 */
enum SlStatus sl_spectral_radii(const struct SlInstance *inst, double *rho_a, double *rho_b);

/**
 * Witness lower bound and eigenvalue upper bound on the SDP value.
 *
 * # Safety
 * `inst` must be a live handle and `out` writable.
 */
enum SlStatus sl_sdp_sandwich(const struct SlInstance *inst,
                              int8_t s,
                              double delta,
                              uintptr_t l,
                              struct SlSandwich *out);

/**
 * `(λ₁+λ₂+2√((c−1)(−λ₁λ₂)))/(c(−λ₁λ₂))`.
 *
 * # Safety
 * `out` must be writable.
 */
enum SlStatus sl_sdp_value_formula(double lambda1, double lambda2, uintptr_t c, double *out);

/**
 * Library version as a static string; do not free.
 */
const char *sl_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECTRA_LAB_H */
