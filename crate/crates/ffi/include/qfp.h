#ifndef QFP_H
#define QFP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every exported function.
 */
typedef enum QfpStatus {
  QFP_STATUS_OK = 0,
  QFP_STATUS_NULL_POINTER = 1,
  QFP_STATUS_DOMAIN = 2,
  QFP_STATUS_SPECIFICATION = 3,
  QFP_STATUS_DIMENSION = 4,
  QFP_STATUS_UNDEFINED_METRIC = 5,
  QFP_STATUS_BRACKET = 6,
  QFP_STATUS_DEGENERATE = 7,
  QFP_STATUS_CONFIG = 8,
  QFP_STATUS_PANIC = 9,
} QfpStatus;

/**
 * Opaque transfer-matrix handle.
 */
typedef struct QfpTransfer QfpTransfer;

/**
 * Gate metrics. Ratios are NaN unless the device has two inputs.
 */
typedef struct QfpMetrics {
  double fidelity;
  double p;
  double p_tilde;
  double eta;
  double r_01;
  double r_10;
  double t_00;
  double t_11;
} QfpMetrics;

typedef struct QfpOptimum {
  double theta;
  double fidelity;
  double p_tilde;
  /**
   * Non-zero when the objective was flat over the bracket.
   */
  int flat_objective;
} QfpOptimum;

typedef struct QfpProbeSettings {
  size_t replicates;
  double loss;
  double sigma;
  double correlated_sigma;
  /**
   * Number of equally spaced phase settings over one turn.
   */
  size_t phase_points;
  double phi_i;
  uint64_t seed;
} QfpProbeSettings;

typedef struct QfpProbeResult {
  /**
   * `γ00, γ01, γ10, γ11`.
   */
  double gamma[4];
  double phi_11;
  double phi_i_fit;
  double fidelity;
  double fidelity_err;
  double p_tilde;
  double p_tilde_err;
} QfpProbeResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message, NUL-terminated, into
 * `buf` (truncating to `len - 1` bytes) and returns the full message
 * length in bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t qfp_last_error_message(char *buf, size_t len);

/**
 * `J_order(theta)`.
 *
 * # Safety
 * `value` must be a valid pointer to a `double`.
 */
enum QfpStatus qfp_bessel_j(int64_t order, double theta, double *value);

/**
 * Smallest sideband order `K` whose Bessel tail falls below `tail_tol`.
 *
 * # Safety
 * `order` must be a valid pointer.
 */
enum QfpStatus qfp_truncation_order(double theta, double tail_tol, size_t *order);

/**
 * Builds the out-of-phase step-shaper device `(B, α, θ)` over `n_inputs`
 * computational bins.
 *
 * # Safety
 * `handle` must be a valid pointer; on success it receives a handle owned
 * by the caller.
 */
enum QfpStatus qfp_transfer_canonical(size_t channels,
                                      double alpha,
                                      double theta,
                                      size_t n_inputs,
                                      double tail_tol,
                                      struct QfpTransfer **handle);

/**
 * Builds a general modulator/shaper/modulator device. `sign1`, `sign2`
 * are `+1` or `-1`; `amplitudes` and `phases` hold `channels` values for
 * channels `-B/2 + 1 ..= B/2`.
 *
 * # Safety
 * `amplitudes` and `phases` must point to `channels` doubles; `handle`
 * must be a valid pointer.
 */
enum QfpStatus qfp_transfer_general(double theta1,
                                    int sign1,
                                    double theta2,
                                    int sign2,
                                    size_t channels,
                                    const double *amplitudes,
                                    const double *phases,
                                    size_t n_inputs,
                                    double tail_tol,
                                    struct QfpTransfer **handle);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `handle` must be null or a handle from this library not yet freed.
 */
void qfp_transfer_free(struct QfpTransfer *handle);

/**
 * Inclusive output-bin window `[m_min, m_max]` and input count.
 *
 * # Safety
 * All pointers must be valid.
 */
enum QfpStatus qfp_transfer_shape(const struct QfpTransfer *handle,
                                  int64_t *m_min,
                                  int64_t *m_max,
                                  size_t *n_inputs);

/**
 * `V_mn`; zero outside the output window.
 *
 * # Safety
 * All pointers must be valid.
 */
enum QfpStatus qfp_transfer_entry(const struct QfpTransfer *handle,
                                  int64_t m,
                                  size_t n,
                                  double *re,
                                  double *im);

/**
 * Metrics against the N-point DFT target (Hadamard for N = 2).
 *
 * # Safety
 * All pointers must be valid.
 */
enum QfpStatus qfp_transfer_metrics(const struct QfpTransfer *handle, struct QfpMetrics *metrics);

/**
 * Fidelity-optimal θ on `[theta_lo, theta_hi]` for the `(B, α)` device.
 *
 * # Safety
 * `result` must be a valid pointer.
 */
enum QfpStatus qfp_optimize_hadamard(size_t channels,
                                     double alpha,
                                     double theta_lo,
                                     double theta_hi,
                                     struct QfpOptimum *result);

/**
 * Fills `settings` with the library defaults.
 *
 * # Safety
 * `settings` must be a valid pointer.
 */
enum QfpStatus qfp_probe_default_settings(struct QfpProbeSettings *settings);

/**
 * Simulates single- and dual-line probing of a two-input device and
 * reconstructs it against the Hadamard target.
 *
 * # Safety
 * All pointers must be valid.
 */
enum QfpStatus qfp_probe_run(const struct QfpTransfer *handle,
                             const struct QfpProbeSettings *settings,
                             struct QfpProbeResult *result);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qfp_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QFP_H */
