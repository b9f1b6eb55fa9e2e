#ifndef TRACELAB_H
#define TRACELAB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum TlStatus {
  TL_STATUS_OK = 0,
  TL_STATUS_NULL_POINTER = 1,
  TL_STATUS_INVALID_UTF8 = 2,
  TL_STATUS_PRECONDITION = 3,
  TL_STATUS_NOT_INVERTIBLE = 4,
  TL_STATUS_PARITY = 5,
  TL_STATUS_FIXTURE = 6,
  TL_STATUS_INSUFFICIENT_COEFFICIENTS = 7,
  TL_STATUS_TRUNCATION = 8,
  TL_STATUS_ILL_CONDITIONED = 9,
  TL_STATUS_NON_FINITE = 10,
  TL_STATUS_UNSUPPORTED = 11,
  TL_STATUS_IDENTITY_VIOLATED = 12,
  TL_STATUS_IO = 13,
  TL_STATUS_PANIC = 14,
} TlStatus;

// Opaque family of forms carrying harmonic weights.
typedef struct TlBasis TlBasis;

// Opaque Dirichlet character.
typedef struct TlCharacter TlCharacter;

// Opaque cusp form with its coefficients.
typedef struct TlForm TlForm;

// A complex number with the layout of `double[2]`.
typedef struct TlComplex {
  double re;
  double im;
} TlComplex;

// Outcome of a comparison between two sides of an identity.
typedef struct TlCheck {
  struct TlComplex lhs;
  struct TlComplex rhs;
  double residual;
  // Error budget the residual is judged against.
  double budget;
  // 1 when the residual is within budget and all refinements converged.
  int32_t passed;
} TlCheck;

// A truncated evaluation with its error estimate.
typedef struct TlValue {
  struct TlComplex value;
  double error_estimate;
  // 1 when no truncation cap was hit.
  int32_t converged;
} TlValue;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len - 1` bytes) and returns the full message length.
//
// # Safety
// `buf` must be null or valid for `len` bytes of writes.
size_t tl_last_error_message(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *tl_version(void);

// The character mod `modulus` at position `index` of the CRT-lexicographic
// enumeration (0 is the trivial character).
//
// # Safety
// `out` must be valid for writes.
enum TlStatus tl_character_new(uint64_t modulus, size_t index, struct TlCharacter **out);

// Releases a character; null is ignored.
//
// # Safety
// `chi` must be null or a handle from [`tl_character_new`] not yet freed.
void tl_character_free(struct TlCharacter *chi);

// `chi(-1)`, the conductor and primitivity of a character.
//
// # Safety
// `chi` must be a live handle; out pointers must be valid for writes.
enum TlStatus tl_character_info(const struct TlCharacter *chi,
                                int32_t *parity,
                                uint64_t *conductor,
                                int32_t *is_primitive);

// Normalized Gauss sum `D^{-1/2} sum chi(a) e(a/D)`.
//
// # Safety
// `chi` must be a live handle; `out` valid for writes.
enum TlStatus tl_gauss_sum(const struct TlCharacter *chi, struct TlComplex *out);

// Plain Kloosterman sum `S(m, n; c)`.
//
// # Safety
// `out` must be valid for writes.
enum TlStatus tl_kloosterman(int64_t m, int64_t n, uint64_t c, double *out);

// Twisted Kloosterman sum `S_chi(m, n; c) = sum conj(chi(x)) e((m xbar + n x)/c)`.
//
// # Safety
// `chi` must be a live handle; `out` valid for writes.
enum TlStatus tl_twisted_kloosterman(const struct TlCharacter *chi,
                                     int64_t m,
                                     int64_t n,
                                     uint64_t c,
                                     struct TlComplex *out);

// `J_nu(x)` for `x >= 0`.
//
// # Safety
// `out` must be valid for writes.
enum TlStatus tl_bessel_j(uint32_t nu, double x, double *out);

// `gamma_k(1 - s) / gamma_k(s)`.
//
// # Safety
// `out` must be valid for writes.
enum TlStatus tl_gamma_ratio(uint32_t k, struct TlComplex s, struct TlComplex *out);

// Loads a fixture file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` valid for writes.
enum TlStatus tl_form_load(const char *path, struct TlForm **out);

// Releases a form; null is ignored.
//
// # Safety
// `form` must be null or a handle from [`tl_form_load`] not yet freed.
void tl_form_free(struct TlForm *form);

// Weight, level and number of stored coefficients of a form.
//
// # Safety
// `form` must be a live handle; out pointers valid for writes.
enum TlStatus tl_form_info(const struct TlForm *form,
                           uint32_t *weight,
                           uint64_t *level,
                           uint64_t *num_coeffs);

// Normalized coefficient `a(n) = lambda(n) / n^{(k-1)/2}`.
//
// # Safety
// `form` must be a live handle; `out` valid for writes.
enum TlStatus tl_form_coefficient(const struct TlForm *form, uint64_t n, struct TlComplex *out);

// Root number of the functional equation of a form.
//
// # Safety
// `form` must be a live handle; `out` valid for writes.
enum TlStatus tl_root_number(const struct TlForm *form, struct TlComplex *out);

// Number of Hecke-structure violations found in the form's coefficients.
//
// # Safety
// `form` must be a live handle; `out` valid for writes.
enum TlStatus tl_form_validate(const struct TlForm *form, uint64_t *violations);

// Builds a basis from `count` forms (copied). A single form without a
// stored harmonic weight gets one from the trace formula; larger bases
// need stored weights.
//
// # Safety
// `forms` must point to `count` live form handles; `out` valid for writes.
enum TlStatus tl_basis_new(const struct TlForm *const *forms, size_t count, struct TlBasis **out);

// Releases a basis; null is ignored.
//
// # Safety
// `basis` must be null or a handle from [`tl_basis_new`] not yet freed.
void tl_basis_free(struct TlBasis *basis);

// Harmonic weight of form `i` of the basis.
//
// # Safety
// `basis` must be a live handle; `out` valid for writes.
enum TlStatus tl_basis_harmonic_weight(const struct TlBasis *basis, size_t i, double *out);

// Petersson formula at `(m, n)`: `lhs` is the spectral side, `rhs` the
// geometric side summed to `cmax` (0 picks the cutoff whose explicit tail
// bound is below `1e-11`).
//
// # Safety
// `basis` must be a live handle; `out` valid for writes.
enum TlStatus tl_petersson(const struct TlBasis *basis,
                           uint64_t m,
                           uint64_t n,
                           uint64_t cmax,
                           struct TlCheck *out);

// The continued average `A_ell(s) = sum_f omega_f conj(a_f(ell)) L(s, f)`
// of the space `(k, chi mod D)`, to absolute accuracy about `target`.
//
// # Safety
// `chi` must be a live handle; `out` valid for writes.
enum TlStatus tl_a_ell_continued(uint32_t k,
                                 const struct TlCharacter *chi,
                                 uint64_t ell,
                                 struct TlComplex s,
                                 double target,
                                 struct TlValue *out);

// Functional equation of `A_1` at `s`, `0 < Re s < 1`: `lhs = A_1(s)`,
// `rhs` the dual side; `budget` is `target`. With `form` null the space is
// level one of weight `k`; otherwise the form fixes the space and root number.
//
// # Safety
// `form` must be null or a live handle; `out` valid for writes.
enum TlStatus tl_fe_residual(const struct TlForm *form,
                             uint32_t k,
                             struct TlComplex s,
                             double target,
                             struct TlCheck *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRACELAB_H */
