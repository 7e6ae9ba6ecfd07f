#ifndef FLAMELAB_H
#define FLAMELAB_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum FlStatus {
  FL_STATUS_OK = 0,
  FL_STATUS_NULL_POINTER = 1,
  FL_STATUS_INVALID_ARGUMENT = 2,
  FL_STATUS_NUMERICAL_FAILURE = 3,
  FL_STATUS_PANIC = 4,
  FL_STATUS_BUFFER_TOO_SMALL = 5,
} FlStatus;

/**
 * Conjugate pole pairs on the lines 0 and π.
 */
typedef struct FlPoleSet FlPoleSet;

/**
 * An RS steady state together with its sampling grid.
 */
typedef struct FlRsSteady FlRsSteady;

typedef struct FlRsSteadySummary {
  double epsilon;
  double w0;
  double wall_slope;
  double velocity;
  double delta_phi;
  double residual;
  uint32_t interior_zeros;
} FlRsSteadySummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread, NUL terminated, into `buf`.
 * `out_len` receives the message length without the terminator.
 *
 * # Safety
 * `buf` must be valid for `len` bytes; `out_len` must be valid.
 */
enum FlStatus fl_last_error_message(char *buf, size_t len, size_t *out_len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fl_version(void);

/**
 * Number of nontrivial RS steady states at `epsilon`.
 */
uint32_t fl_rs_steady_count(double epsilon);

/**
 * Period of the phase-plane orbit through `(w0, 0)`.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum FlStatus fl_orbit_period(double epsilon, double w0, double *out);

/**
 * Builds the steady state `v_j^±` (`sign` is +1 or −1) on a grid with
 * `n_modes` modes.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum FlStatus fl_rs_steady_new(uint32_t j,
                               int32_t sign,
                               double epsilon,
                               uint32_t n_modes,
                               struct FlRsSteady **out);

/**
 * # Safety
 * `h` must come from [`fl_rs_steady_new`] and not be used afterwards.
 */
void fl_rs_steady_free(struct FlRsSteady *h);

/**
 * # Safety
 * `h` must be a live handle and `out` valid for one write.
 */
enum FlStatus fl_rs_steady_summary(const struct FlRsSteady *h, struct FlRsSteadySummary *out);

/**
 * Grid abscissae and `v` values; both buffers need `out_len` entries.
 *
 * # Safety
 * `x` and `v` must be valid for `len` writes; `out_len` must be valid.
 */
enum FlStatus fl_rs_steady_profile(const struct FlRsSteady *h,
                                   double *x,
                                   double *v,
                                   size_t len,
                                   size_t *out_len);

/**
 * Comparison-test verdict: 1 stable, 0 unstable.
 *
 * # Safety
 * `h` must be a live handle and `stable` valid for one write.
 */
enum FlStatus fl_rs_steady_is_stable(const struct FlRsSteady *h, int32_t *stable);

/**
 * # Safety
 * Each height pointer must be valid for its count of reads (or null when
 * the count is zero); `out` must be valid for one write.
 */
enum FlStatus fl_poles_new(double epsilon,
                           const double *heights_0,
                           size_t n_0,
                           const double *heights_pi,
                           size_t n_pi,
                           struct FlPoleSet **out);

/**
 * The coalescent steady state with `n_pairs` pairs on the line 0
 * (`sign` = +1) or π (`sign` = −1).
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum FlStatus fl_poles_coalescent(uint32_t n_pairs,
                                  double epsilon,
                                  int32_t sign,
                                  struct FlPoleSet **out);

/**
 * # Safety
 * `h` must come from this library and not be used afterwards.
 */
void fl_poles_free(struct FlPoleSet *h);

/**
 * Heights in construction order: line 0 first, then line π.
 *
 * # Safety
 * `out` must be valid for `len` writes; `out_len` must be valid.
 */
enum FlStatus fl_poles_heights(const struct FlPoleSet *h, double *out, size_t len, size_t *out_len);

/**
 * Height velocities `F_j`.
 *
 * # Safety
 * `out` must be valid for `len` writes; `out_len` must be valid.
 */
enum FlStatus fl_poles_force(const struct FlPoleSet *h, double *out, size_t len, size_t *out_len);

/**
 * # Safety
 * `h` must be a live handle and `out` valid for one write.
 */
enum FlStatus fl_poles_liapunov(const struct FlPoleSet *h, double *out);

/**
 * Flows the set toward a steady state in place. `converged` is set to 1
 * when the Newton polish reached its tolerance.
 *
 * # Safety
 * `h` must be a live handle and `converged` valid for one write.
 */
enum FlStatus fl_poles_flow_to_steady(struct FlPoleSet *h,
                                      double t_max,
                                      double tol,
                                      int32_t *converged);

/**
 * Hessian classification of a steady set: 0 maximum, 1 saddle,
 * 2 inconclusive.
 *
 * # Safety
 * `h` must be a live handle and `out` valid for one write.
 */
enum FlStatus fl_poles_classify(const struct FlPoleSet *h, int32_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLAMELAB_H */
