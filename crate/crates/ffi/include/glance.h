#ifndef GLANCE_H
#define GLANCE_H

/* Generated by cbindgen from the glance-ffi crate. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum GlanceStatus {
  GLANCE_STATUS_OK = 0,
  GLANCE_STATUS_DOMAIN = 1,
  GLANCE_STATUS_RANGE = 2,
  GLANCE_STATUS_POLE = 3,
  GLANCE_STATUS_DEGENERATE = 4,
  GLANCE_STATUS_PRECONDITION = 5,
  GLANCE_STATUS_INTEGRATOR = 6,
  GLANCE_STATUS_ITERATION = 7,
  GLANCE_STATUS_PROPERTY = 8,
  GLANCE_STATUS_CONFIG = 9,
  GLANCE_STATUS_IO = 10,
  GLANCE_STATUS_NULL_POINTER = 11,
  GLANCE_STATUS_PANIC = 12,
} GlanceStatus;

/**
 * Spectral family selector.
 */
typedef enum GlanceMode {
  GLANCE_MODE_ADS = 0,
  GLANCE_MODE_FRIEDLANDER = 1,
} GlanceMode;

/**
 * Extended profile selector for the resolvent probe.
 */
typedef enum GlanceSign {
  GLANCE_SIGN_PLUS = 0,
  GLANCE_SIGN_MINUS = 1,
} GlanceSign;

/**
 * Synthesized field on a set of x rows.
 */
typedef struct GlanceField GlanceField;

/**
 * Model parameters (`n`, `λ`, mode).
 */
typedef struct GlanceModel GlanceModel;

/**
 * One solved spectral column.
 */
typedef struct GlanceSpectral GlanceSpectral;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t glance_last_error(char *buf, size_t len);

/**
 * # Safety
 * `out` must be a valid pointer; the handle is released with [`glance_model_free`].
 */
enum GlanceStatus glance_model_new(size_t n,
                                   double lambda,
                                   enum GlanceMode mode,
                                   struct GlanceModel **out);

/**
 * # Safety
 * `model` must be null or a handle from [`glance_model_new`] not yet freed.
 */
void glance_model_free(struct GlanceModel *model);

/**
 * Indicial roots `s₋ < s₊`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum GlanceStatus glance_model_exponents(const struct GlanceModel *model,
                                         double *s_minus,
                                         double *s_plus);

/**
 * Solves the spectral ODE for `(θ', θn)` on the default uniform grid up to `x_max`.
 *
 * # Safety
 * Pointers must be valid; release the result with [`glance_spectral_free`].
 */
enum GlanceStatus glance_spectral_solve(const struct GlanceModel *model,
                                        double theta_prime,
                                        double theta_n,
                                        double x_max,
                                        double tol,
                                        struct GlanceSpectral **out);

/**
 * Number of grid points in a spectral solution (0 for a null handle).
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
size_t glance_spectral_len(const struct GlanceSpectral *sol);

/**
 * Copies grid, real and imaginary parts into caller buffers of length `len`.
 *
 * # Safety
 * Each buffer must be null (skipped) or hold `len` doubles.
 */
enum GlanceStatus glance_spectral_copy(const struct GlanceSpectral *sol,
                                       double *x,
                                       double *re,
                                       double *im,
                                       size_t len);

/**
 * # Safety
 * `sol` must be null or a live handle.
 */
void glance_spectral_free(struct GlanceSpectral *sol);

/**
 * Synthesizes the field on `rows` (length `nrows`) with an `points × points`
 * frequency box of half-width `theta_max`. A negative `epsilon` selects the
 * default taper.
 *
 * # Safety
 * Pointers must be valid; release the result with [`glance_field_free`].
 */
enum GlanceStatus glance_field_synthesize(const struct GlanceModel *model,
                                          size_t points,
                                          double theta_max,
                                          double epsilon,
                                          const double *rows,
                                          size_t nrows,
                                          struct GlanceField **out);

/**
 * Number of x rows and samples per axis.
 *
 * # Safety
 * Pointers must be valid.
 */
enum GlanceStatus glance_field_dims(const struct GlanceField *field, size_t *nrows, size_t *ny);

/**
 * Copies row `row` as interleaved (re, im) pairs into `buf` of `2·ny²` doubles.
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum GlanceStatus glance_field_row(const struct GlanceField *field,
                                   size_t row,
                                   double *buf,
                                   size_t len);

/**
 * Median boundary exponent over cells with `y_n > beta`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum GlanceStatus glance_field_shadow_fit(const struct GlanceField *field,
                                          double beta,
                                          double *exponent);

/**
 * Writes row `row` as a GLNC1 grid file at the NUL-terminated UTF-8 `path`.
 *
 * # Safety
 * `path` must be a valid C string.
 */
enum GlanceStatus glance_field_write_grid(const struct GlanceField *field,
                                          size_t row,
                                          const char *path);

/**
 * # Safety
 * `field` must be null or a live handle.
 */
void glance_field_free(struct GlanceField *field);

/**
 * Fitted exponent `p` of `‖R(h)‖ ∝ h^p` over a geometric `h` list.
 *
 * # Safety
 * `h` must hold `nh` doubles and `exponent` must be valid.
 */
enum GlanceStatus glance_resolvent_exponent(enum GlanceSign sign,
                                            const double *h,
                                            size_t nh,
                                            double epsilon,
                                            double *exponent);

/**
 * `Ai(z)` and `Ai'(z)` for `|z| ≤ 30`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum GlanceStatus glance_airy_ai(double z, double *ai, double *ai_prime);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GLANCE_H */
