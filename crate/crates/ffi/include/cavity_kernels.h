#ifndef CAVITY_KERNELS_H
#define CAVITY_KERNELS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * How static limits and curls are obtained.
 */
typedef enum CkBackend {
  /**
   * Closed forms when available, generic otherwise.
   */
  CK_BACKEND_AUTO = 0,
  CK_BACKEND_CLOSED_FORM = 1,
  CK_BACKEND_GENERIC = 2,
} CkBackend;

typedef enum CkIntegrand {
  CK_INTEGRAND_WG = 0,
  CK_INTEGRAND_G_CURL = 1,
  CK_INTEGRAND_CURL_G = 2,
  CK_INTEGRAND_CURL_G_CURL_OVER_W = 3,
} CkIntegrand;

typedef enum CkKernelKind {
  CK_KERNEL_KIND_EE = 0,
  CK_KERNEL_KIND_EM = 1,
  CK_KERNEL_KIND_ME = 2,
  CK_KERNEL_KIND_MM = 3,
} CkKernelKind;

typedef enum CkPolarization {
  CK_POLARIZATION_X = 0,
  CK_POLARIZATION_Y = 1,
} CkPolarization;

/**
 * Result codes.
 */
typedef enum CkStatus {
  CK_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  CK_STATUS_NULL_POINTER = 1,
  CK_STATUS_INVALID_INPUT = 2,
  /**
   * Coincident points, points outside the provider domain or ω = 0 for `G`.
   */
  CK_STATUS_DOMAIN = 3,
  /**
   * Extrapolation, quadrature or finite-difference failure.
   */
  CK_STATUS_NUMERICAL = 4,
  /**
   * Dimension caps, regime violations and indefinite matrices.
   */
  CK_STATUS_LIMIT = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  CK_STATUS_PANIC = 6,
} CkStatus;

/**
 * Opaque Green's-tensor provider.
 */
typedef struct CkProvider CkProvider;

typedef struct CkComplex {
  double re;
  double im;
} CkComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static nul-terminated string.
 */
const char *ck_version(void);

/**
 * Message describing the last failure on this thread, or null if the last
 * call succeeded. Valid until the next library call on the same thread.
 */
const char *ck_last_error_message(void);

/**
 * # Safety
 * `out` must be valid for one pointer write.
 */
enum CkStatus ck_provider_free_space(struct CkProvider **out);

/**
 * Perfect mirror occupying `z < plane_z`.
 *
 * # Safety
 * `out` must be valid for one pointer write.
 */
enum CkStatus ck_provider_mirror(double plane_z, struct CkProvider **out);

/**
 * Free space plus an antisymmetric term along `bias` (`double[3]`).
 *
 * # Safety
 * `bias` must point to 3 doubles and `out` must be valid for one pointer write.
 */
enum CkStatus ck_provider_nonreciprocal(const double *bias, struct CkProvider **out);

/**
 * Planar cavity of the given length as a truncated mode expansion with
 * `n_modes` modes and damping `gamma`.
 *
 * # Safety
 * `out` must be valid for one pointer write.
 */
enum CkStatus ck_provider_planar_cavity(double length,
                                        enum CkPolarization polarization,
                                        size_t n_modes,
                                        double gamma,
                                        struct CkProvider **out);

/**
 * Releases a provider. Null is ignored.
 *
 * # Safety
 * `p` must come from a `ck_provider_*` constructor and not be used afterwards.
 */
void ck_provider_free(struct CkProvider *p);

/**
 * Provider name, owned by the handle.
 *
 * # Safety
 * `p` must be a live provider handle or null.
 */
const char *ck_provider_name(const struct CkProvider *p);

/**
 * `ω² G(r, r', ω)` written to `out[9]`.
 *
 * # Safety
 * `r` and `rp` must point to 3 doubles, `out` to 9 writable complex values.
 */
enum CkStatus ck_w2g(const struct CkProvider *p,
                     const double *r,
                     const double *rp,
                     struct CkComplex omega,
                     struct CkComplex *out);

/**
 * Static coupling kernel `λ^kind(r, r')`. The regular part goes to
 * `regular[9]`; the coefficient of `δ(r − r')` goes to `delta[9]` when
 * `delta` is non-null.
 *
 * # Safety
 * `r` and `rp` must point to 3 doubles, `regular` (and `delta` if non-null)
 * to 9 writable complex values.
 */
enum CkStatus ck_kernel(const struct CkProvider *p,
                        enum CkKernelKind kind,
                        enum CkBackend backend,
                        const double *r,
                        const double *rp,
                        struct CkComplex *regular,
                        struct CkComplex *delta);

/**
 * Keyhole-contour decomposition with contour radii scaled to `|r − r'|`.
 * Writes the real-axis plus large-arc integral to `sum[9]`, the residue at
 * the origin to `residue[9]` and the relative closure error to `closure`.
 * Any output pointer may be null.
 *
 * # Safety
 * `r` and `rp` must point to 3 doubles; non-null outputs must be writable.
 */
enum CkStatus ck_residue_decomposition(const struct CkProvider *p,
                                       enum CkIntegrand integrand,
                                       const double *r,
                                       const double *rp,
                                       size_t levels,
                                       struct CkComplex *sum,
                                       struct CkComplex *residue,
                                       double *closure);

/**
 * Total pairwise dipole energy of `n` sites. `positions`, `d` and `m` are
 * `double[3 n]`; `d` or `m` may be null for zero moments.
 *
 * # Safety
 * Non-null arrays must hold `3 n` doubles; `energy` must be writable.
 */
enum CkStatus ck_pairwise_energy(const struct CkProvider *p,
                                 size_t n,
                                 const double *positions,
                                 const double *d,
                                 const double *m,
                                 double *energy);

/**
 * Size of the diamagnetic correction relative to the dipolar one for a
 * constituent with Compton wavelength `lambda_compton` at distance `r`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CkStatus ck_diamagnetic_ratio(double lambda_compton, double r, double *out);

/**
 * Converts `value` of the named quantity kind (for example `"length"`,
 * `"kernel_ee"`) between natural and SI units.
 *
 * # Safety
 * `kind` must be a nul-terminated string; `out` must be writable.
 */
enum CkStatus ck_convert_units(double value, const char *kind, bool to_si, double *out);

/**
 * Runs a JSON configuration file as the command-line tool would and returns
 * its exit code (0 success, 1 failed checks or unwritable output, 2 invalid
 * input, 3 numerical failure). `out_dir` may be null; `threads` 0 uses all
 * cores.
 *
 * # Safety
 * `config_path` and non-null `out_dir` must be nul-terminated strings.
 */
int ck_run_config(const char *config_path, const char *out_dir, size_t threads);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAVITY_KERNELS_H */
