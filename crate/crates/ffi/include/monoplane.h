#ifndef MONOPLANE_H
#define MONOPLANE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>

/**
 * Result code of every exported function.
 */
typedef enum MpStatus {
  MP_STATUS_OK = 0,
  MP_STATUS_NULL_POINTER = 1,
  MP_STATUS_INVALID_PARAMETER = 2,
  MP_STATUS_PARSE = 3,
  MP_STATUS_NON_CONVERGENCE = 4,
  MP_STATUS_LIPSCHITZ_VIOLATION = 5,
  MP_STATUS_SOLVE_FAILED = 6,
  MP_STATUS_COVERING_FAILURE = 7,
  MP_STATUS_AUDIT_FAILED = 8,
  MP_STATUS_CONFIG = 9,
  MP_STATUS_IO = 10,
  MP_STATUS_UTF8 = 11,
  MP_STATUS_PANIC = 12,
} MpStatus;

/**
 * A 1-Lipschitz Beltrami datum `H`.
 */
typedef struct MpBeltrami MpBeltrami;

/**
 * A monotone vector field.
 */
typedef struct MpField MpField;

/**
 * A discrete Dirichlet solution on the unit disc.
 */
typedef struct MpSolution MpSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated) if `len` is large
 * enough, and returns the buffer size needed. Pass a null `buf` to query the size.
 */
size_t mp_last_error_message(char *buf, size_t len);

/**
 * Parses a field spec such as `"p_laplacian(p=4)"` or `"mollify(g0_cubic, eps=0.1)"`.
 */
enum MpStatus mp_field_new(const char *spec, struct MpField **field);

void mp_field_free(struct MpField *field);

/**
 * Writes the canonical spec text; `needed` receives the buffer size including the NUL.
 */
enum MpStatus mp_field_label(const struct MpField *field, char *buf, size_t len, size_t *needed);

enum MpStatus mp_field_eval(const struct MpField *field,
                            double x,
                            double y,
                            double *gx,
                            double *gy);

/**
 * Row-major Jacobian `[a, b, c, d]` into `jac[4]`.
 */
enum MpStatus mp_field_jacobian(const struct MpField *field, double x, double y, double *jac);

/**
 * `<G(a) - G(b), a - b>`.
 */
enum MpStatus mp_field_gap(const struct MpField *field,
                           double ax,
                           double ay,
                           double bx,
                           double by,
                           double *gap);

/**
 * Solves `G(x) = target` to absolute tolerance `tol`.
 */
enum MpStatus mp_field_invert(const struct MpField *field,
                              double tx,
                              double ty,
                              double tol,
                              double *x,
                              double *y);

/**
 * The dual field `G*(x) = i G^{-1}(-i x)` as a new handle.
 */
enum MpStatus mp_field_dual(const struct MpField *field, struct MpField **dual);

/**
 * Parses a Beltrami datum: `"zero"`, `"affine(a_re, a_im, b_re, b_im)"`, `"explicit_s6"` or
 * `"minty(<field spec>)"`.
 */
enum MpStatus mp_beltrami_new(const char *spec, struct MpBeltrami **h);

void mp_beltrami_free(struct MpBeltrami *h);

enum MpStatus mp_beltrami_eval(const struct MpBeltrami *h,
                               double x,
                               double y,
                               double *hx,
                               double *hy);

/**
 * Difference quotient `L` of `H` at `base` along `offset`, with both Γ± values.
 */
enum MpStatus mp_beltrami_quotient(const struct MpBeltrami *h,
                                   double base_x,
                                   double base_y,
                                   double offset_x,
                                   double offset_y,
                                   double *l_re,
                                   double *l_im,
                                   double *gamma_plus,
                                   double *gamma_minus);

/**
 * Beltrami datum `H` of a monotone field.
 */
enum MpStatus mp_minty_forward(const struct MpField *field, struct MpBeltrami **h);

/**
 * Monotone field recovered from a Beltrami datum.
 */
enum MpStatus mp_minty_backward(const struct MpBeltrami *h, struct MpField **field);

/**
 * Runs every check of the explicit counterexample; `pass` receives the overall verdict and
 * `rows` the number of checks.
 */
enum MpStatus mp_counterexample_audit(bool *pass, size_t *rows);

/**
 * The exact counterexample solution `u` at `(x, y)`.
 */
enum MpStatus mp_counterexample_u(double x, double y, double *u);

/**
 * Solves `div G(grad u) = 0` on the unit disc with mesh size `h` and boundary data
 * `c + sum_k cos_k cos(k t) + sin_k sin(k t)`, `k` starting at 1.
 */
enum MpStatus mp_solve(const struct MpField *field,
                       double h,
                       double constant,
                       const double *cos_coeffs,
                       size_t n_cos,
                       const double *sin_coeffs,
                       size_t n_sin,
                       double tol,
                       struct MpSolution **solution);

void mp_solution_free(struct MpSolution *solution);

enum MpStatus mp_solution_node_count(const struct MpSolution *solution, size_t *count);

/**
 * Copies node coordinates (`xy[2n]`, interleaved) and nodal values (`values[n]`); either
 * output may be null. `len` is the node capacity of the buffers.
 */
enum MpStatus mp_solution_nodes(const struct MpSolution *solution,
                                double *xy,
                                double *values,
                                size_t len);

/**
 * Final residual `max_i |R_i|`, Newton-type iterations, and `max |grad u|` over triangles.
 */
enum MpStatus mp_solution_report(const struct MpSolution *solution,
                                 double *residual,
                                 size_t *iterations,
                                 double *lipschitz);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MONOPLANE_H */
