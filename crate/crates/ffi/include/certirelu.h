#ifndef CERTIRELU_H
#define CERTIRELU_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result codes. `CR_STATUS_OK` is zero.
typedef enum CrStatus {
  CR_STATUS_OK = 0,
  CR_STATUS_NULL_POINTER = 1,
  CR_STATUS_INVALID_ARGUMENT = 2,
  CR_STATUS_DIMENSION_MISMATCH = 3,
  CR_STATUS_INVALID_UTF8 = 4,
  CR_STATUS_PARSE = 5,
  CR_STATUS_FIT_FAILED = 6,
  CR_STATUS_PANIC = 7,
  CR_STATUS_INTERNAL = 8,
} CrStatus;

typedef enum CrGradNorm {
  CR_GRAD_NORM_TWO = 0,
  CR_GRAD_NORM_INF = 1,
} CrGradNorm;

// Opaque network handle.
typedef struct CrNetwork CrNetwork;

// Smoothness certificate; `radius` is the ball radius `R`.
typedef struct CrCertificate {
  size_t n;
  uint32_t k;
  double rho;
  double radius;
  double p_min;
} CrCertificate;

// Constants derived from a certificate.
typedef struct CrBoundConstants {
  double sphere_area;
  double beta;
  double lipschitz;
  double kappa1;
  double kappa2;
  double zeta0;
  double zeta1;
  double a_cap;
  double b_cap;
} CrBoundConstants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the
// next library call on the same thread.
const char *cr_last_error(void);

// Library version as a static NUL-terminated string.
const char *cr_version(void);

// Parses a network from JSON `{"n", "a", "b", "units": [{"alpha", "t", "c"}]}`.
//
// # Safety
// `json` must be a valid NUL-terminated string and `out` writable.
enum CrStatus cr_network_from_json(const char *json, struct CrNetwork **out);

// Serializes a network to JSON. Release the string with [`cr_string_free`].
//
// # Safety
// `net` must be a live handle and `out` writable.
enum CrStatus cr_network_to_json(const struct CrNetwork *net, char **out);

// # Safety
// `s` must come from this library or be null.
void cr_string_free(char *s);

// # Safety
// `net` must come from this library or be null; it is invalid afterwards.
void cr_network_free(struct CrNetwork *net);

// Input dimension, or 0 for a null handle.
//
// # Safety
// `net` must be a live handle or null.
size_t cr_network_dim(const struct CrNetwork *net);

// Number of hidden units, or 0 for a null handle.
//
// # Safety
// `net` must be a live handle or null.
size_t cr_network_num_units(const struct CrNetwork *net);

// Writes `f_N(x)` to `out`. `x` holds `n` values.
//
// # Safety
// `x` must point to `n` readable doubles and `out` be writable.
enum CrStatus cr_network_eval(const struct CrNetwork *net, const double *x, size_t n, double *out);

// Writes the `n` components of `grad f_N(x)` to `grad`.
//
// # Safety
// `x` must point to `n` readable doubles and `grad` to `n` writable ones.
enum CrStatus cr_network_eval_grad(const struct CrNetwork *net,
                                   const double *x,
                                   size_t n,
                                   double *grad);

// Samples `m` units uniformly on `S^{n-1} x [-radius, radius]` from stream
// `stream` of the generator keyed by `seed`, then fits the output weights
// by least squares to `targets` at the row-major `num_points x n` array
// `points`.
//
// # Safety
// `points` must hold `num_points * n` doubles, `targets` `num_points`, and
// `out` be writable.
enum CrStatus cr_fit_uniform(size_t n,
                             double radius,
                             size_t m,
                             uint64_t seed,
                             uint64_t stream,
                             const double *points,
                             size_t num_points,
                             const double *targets,
                             double ridge,
                             struct CrNetwork **out);

// # Safety
// `cert` must be readable and `out` writable.
enum CrStatus cr_bound_constants(const struct CrCertificate *cert, struct CrBoundConstants *out);

// Function-error bound at width `m` and confidence `1 - delta`.
//
// # Safety
// `cert` must be readable and `out` writable.
enum CrStatus cr_rhs_function(const struct CrCertificate *cert,
                              size_t m,
                              double delta,
                              double *out);

// Gradient-error bound at width `m` and confidence `1 - delta`.
//
// # Safety
// `cert` must be readable and `out` writable.
enum CrStatus cr_rhs_grad(const struct CrCertificate *cert,
                          size_t m,
                          double delta,
                          enum CrGradNorm norm,
                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CERTIRELU_H */
