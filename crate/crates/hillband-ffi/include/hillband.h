/* C ABI for the hillband periodic Schrodinger operator toolkit. */

#ifndef HILLBAND_H
#define HILLBAND_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every API call.
typedef enum HbStatus {
  // Success.
  HB_OK = 0,
  // A required pointer argument was null.
  HB_NULL_POINTER = 1,
  // Invalid argument or configuration value.
  HB_INVALID_ARGUMENT = 2,
  // The evaluation point lies outside the function's domain
  // (on a gap cut, at a Dirichlet pole, ...).
  HB_DOMAIN = 3,
  // An iterative computation failed to converge.
  HB_CONVERGENCE = 4,
  // The request exceeds what this handle supports.
  HB_CAPABILITY = 5,
  // Internal failure.
  HB_INTERNAL = 6,
  // A panic was caught at the FFI boundary.
  HB_PANIC = 7,
} HbStatus;

// Opaque operator handle.
typedef struct hb_operator {
  uint8_t _private[0];
} hb_operator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Create an operator for a smooth potential given by Fourier coefficients:
// `p(x) = cos[0] + sum_n cos[n] cos(2 pi n x) + sum_n sin[n-1] sin(2 pi n x)`.
// When `normalize` is true the potential is shifted so the ground edge
// sits at energy 0 (required for quasimomentum symmetries).
//
// # Safety
// Array pointers must match their lengths; `out` must be a valid pointer.
enum HbStatus hb_operator_new_fourier(const double *cos_coeffs,
                                      uintptr_t n_cos,
                                      const double *sin_coeffs,
                                      uintptr_t n_sin,
                                      uintptr_t n_gaps,
                                      uintptr_t m_max,
                                      bool normalize,
                                      struct hb_operator **out);

// Create an operator for the distributional potential `c + p'` where the
// periodic primitive `p` is given by Fourier coefficients (same layout as
// `hb_operator_new_fourier`).  The Riccati reduction and the `E_0^+ = 0`
// calibration run at creation time.
//
// # Safety
// Array pointers must match their lengths; `out` must be a valid pointer.
enum HbStatus hb_operator_new_distribution(const double *p_cos,
                                           uintptr_t n_cos,
                                           const double *p_sin,
                                           uintptr_t n_sin,
                                           uintptr_t n_gaps,
                                           struct hb_operator **out);

// Release an operator handle.  Passing null is a no-op.
//
// # Safety
// `op` must be a handle returned by a creation function, freed once.
void hb_operator_free(struct hb_operator *op);

// Number of computed gaps.
//
// # Safety
// `op` must be a live handle; `out` a valid pointer.
enum HbStatus hb_operator_n_gaps(const struct hb_operator *op, uintptr_t *out);

// Edges of gap `n` (1-based): energies `E_n^-`, `E_n^+` and momenta
// `e_n^-`, `e_n^+`.
//
// # Safety
// `op` must be a live handle; out-pointers valid.
enum HbStatus hb_operator_gap_edges(const struct hb_operator *op,
                                    uintptr_t n,
                                    double *energy_minus,
                                    double *energy_plus,
                                    double *e_minus,
                                    double *e_plus);

// Comb data of gap `n`: slit height `h_n`, gap mass `M_n`, and whether
// the gap is numerically degenerate (closed).
//
// # Safety
// `op` must be a live handle; out-pointers valid.
enum HbStatus hb_operator_gap_comb(const struct hb_operator *op,
                                   uintptr_t n,
                                   double *height,
                                   double *mass,
                                   bool *degenerate);

// The Lyapunov function (Hill discriminant) `Delta(z)` at momentum
// `z = z_re + i z_im`.
//
// # Safety
// `op` must be a live handle; out-pointers valid.
enum HbStatus hb_discriminant(const struct hb_operator *op,
                              double z_re,
                              double z_im,
                              double *out_re,
                              double *out_im);

// The quasimomentum `k(z)` through the branch-tracked direct route.
// Points on a gap cut return `HB_DOMAIN`.
//
// # Safety
// `op` must be a live handle; out-pointers valid.
enum HbStatus hb_quasimomentum(const struct hb_operator *op,
                               double z_re,
                               double z_im,
                               double *out_re,
                               double *out_im);

// The Titchmarsh-Weyl functions `M+(z)` and `M-(z)`.  Dirichlet poles
// (zeros of `phi(1, z)`) return `HB_DOMAIN`.
//
// # Safety
// `op` must be a live handle; out-pointers valid.
enum HbStatus hb_weyl_m(const struct hb_operator *op,
                        double z_re,
                        double z_im,
                        double *plus_re,
                        double *plus_im,
                        double *minus_re,
                        double *minus_im);

// For distributional operators: the calibrated constant `c` and
// `||q||^2` of the Riccati solution.  Smooth handles return
// `HB_CAPABILITY`.
//
// # Safety
// `op` must be a live handle; out-pointers valid.
enum HbStatus hb_riccati_constants(const struct hb_operator *op, double *c, double *norm_q_sq);

// Copy the last error message of this thread into `buf` (NUL-terminated,
// truncated to `cap`).  Returns the full message length in bytes,
// excluding the NUL.
//
// # Safety
// `buf` must point to `cap` writable bytes (or be null with `cap` 0).
uintptr_t hb_last_error(char *buf, uintptr_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HILLBAND_H */
