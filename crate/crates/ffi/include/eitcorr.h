#ifndef EITCORR_H
#define EITCORR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EitStatus {
  EIT_STATUS_OK = 0,
  EIT_STATUS_NULL_POINTER = 1,
  EIT_STATUS_INVALID_PARAMETER = 2,
  // Both drive fields vanish.
  EIT_STATUS_DEGENERATE = 3,
  EIT_STATUS_SINGULAR = 4,
  // The requested quantity is undefined at this point.
  EIT_STATUS_UNDEFINED = 5,
  EIT_STATUS_NUMERICAL = 6,
  EIT_STATUS_PANIC = 7,
} EitStatus;

// Opaque model handle.
typedef struct EitSystem EitSystem;

// Model parameters. Rates and detunings are angular frequencies in rad/µs.
typedef struct EitParams {
  double gamma;
  double gamma_d;
  double gamma_bar;
  double rabi1;
  double rabi2;
  double delta1;
  double delta2;
  double kappa1;
  double kappa2;
  double phase_noise_correlation;
} EitParams;

typedef struct EitComplex {
  double re;
  double im;
} EitComplex;

typedef struct EitSteadyState {
  struct EitComplex p1;
  struct EitComplex p2;
  struct EitComplex rho12;
  double populations[3];
  double t1;
  double t2;
} EitSteadyState;

// Lowest-order spectra and their regrouping. `c` is meaningful only when
// `c_defined` is nonzero.
typedef struct EitDecomposition {
  double omega;
  double epsilon_sq;
  double pi_im;
  double pi_re;
  double pi_ri;
  double pi_ir;
  double nu_im;
  double nu_re;
  double nu_ri;
  double nu_ir;
  double extra_c1;
  double s11;
  double s22;
  double s12;
  double c;
  int c_defined;
} EitDecomposition;

// Spectra including all orders in the phase noise.
typedef struct EitFullSpectra {
  double omega;
  double s11;
  double s22;
  double s12;
  double c;
  int c_defined;
} EitFullSpectra;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static description of a status code; unknown codes are reported as such.
const char *eit_status_message(int status);

// Writes the reference parameter set.
//
// # Safety
// `out` must be null or valid for writes.
enum EitStatus eit_params_reference(struct EitParams *out);

// Builds a model and its steady state. Free with [`eit_system_free`].
//
// # Safety
// `params` must be null or point to a valid `EitParams`; `out` must be
// null or valid for writes.
enum EitStatus eit_system_new(const struct EitParams *params, struct EitSystem **out);

// Releases a handle. Null is accepted.
//
// # Safety
// `sys` must be null or a handle from [`eit_system_new`] not yet freed.
void eit_system_free(struct EitSystem *sys);

// # Safety
// `sys` must be null or a live handle; `out` null or valid for writes.
enum EitStatus eit_system_steady_state(const struct EitSystem *sys, struct EitSteadyState *out);

// Lowest-order spectra at angular frequency `omega`.
//
// # Safety
// `sys` must be null or a live handle; `out` null or valid for writes.
enum EitStatus eit_system_spectra(const struct EitSystem *sys,
                                  double omega,
                                  struct EitDecomposition *out);

// All-orders spectra at angular frequency `omega`.
//
// # Safety
// `sys` must be null or a live handle; `out` null or valid for writes.
enum EitStatus eit_system_full_spectra(const struct EitSystem *sys,
                                       double omega,
                                       struct EitFullSpectra *out);

// Zero-delay intensity correlation from the steady state.
//
// # Safety
// `sys` must be null or a live handle; `out` null or valid for writes.
enum EitStatus eit_system_g2_zero(const struct EitSystem *sys, double *out);

// Full width at half maximum of a sampled curve; `dip` selects a minimum.
//
// # Safety
// `x` and `y` must be null or valid for `n` reads; `fwhm` null or valid
// for writes.
enum EitStatus eit_fit_linewidth(const double *x, const double *y, size_t n, int dip, double *fwhm);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EITCORR_H */
