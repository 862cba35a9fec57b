#ifndef VIEWRACE_H
#define VIEWRACE_H

/* Generated by cbindgen from the viewrace-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by the fallible functions.
 */
typedef enum {
  VR_STATUS_OK = 0,
  VR_STATUS_NULL_POINTER = 1,
  VR_STATUS_INVALID_ARGUMENT = 2,
  VR_STATUS_INVALID_CONFIG = 3,
  VR_STATUS_SOLVER_FAILURE = 4,
  VR_STATUS_NON_CONVERGENCE = 5,
  VR_STATUS_IO = 6,
} VrStatus;

/**
 * Equilibrium kinds mirrored for the C surface.
 */
typedef enum {
  VR_EQUILIBRIUM_KIND_DEGENERATE_ALL_MIN = 0,
  VR_EQUILIBRIUM_KIND_SYMMETRIC_EXACT = 1,
  VR_EQUILIBRIUM_KIND_EPSILON_APPROX = 2,
  VR_EQUILIBRIUM_KIND_ITERATION_FIXED_POINT = 3,
} VrEquilibriumKind;

/**
 * Opaque game configuration handle.
 */
typedef struct VrConfig VrConfig;

/**
 * Opaque equilibrium result handle.
 */
typedef struct VrEquilibrium VrEquilibrium;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Description of the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *vr_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *vr_version(void);

/**
 * Builds a configuration from per-player parameter arrays of length
 * `n_players`. Returns null (with an error message) on invalid input.
 *
 * # Safety
 * `lambda`, `gamma`, `p` and `z` must each point to `n_players` readable
 * doubles; `z` may be null, meaning all-zero initial fractions.
 */
VrConfig *vr_config_new(const double *lambda,
                        const double *gamma,
                        const double *p,
                        const double *z,
                        uintptr_t n_players,
                        double u_min,
                        double u_max);

/**
 * Loads a configuration from a scenario file.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
VrConfig *vr_config_load(const char *path);

/**
 * Releases a configuration handle. Null is ignored.
 *
 * # Safety
 * `config` must come from `vr_config_new`/`vr_config_load` and not have
 * been freed already.
 */
void vr_config_free(VrConfig *config);

/**
 * Number of players in the configuration; zero for a null handle.
 *
 * # Safety
 * `config` must be a live configuration handle or null.
 */
uintptr_t vr_config_n_players(const VrConfig *config);

/**
 * Vanishing-discount switching threshold for a single player facing the
 * aggregate opponent rate `a_minus_i`; pure, never fails.
 */
double vr_vanishing_threshold(double lambda,
                              double gamma,
                              double a_minus_i,
                              double u_min,
                              double u_max);

/**
 * Solves for an equilibrium of the configuration: the exact symmetric one
 * for identical players, the ε-approximate construction for common λ with
 * strictly decreasing γ (ε measured at discount `p_eps`), and round-robin
 * best responses otherwise. On success stores a handle in `out`.
 *
 * # Safety
 * `config` must be a live handle and `out` a writable pointer.
 */
VrStatus vr_solve_equilibrium(const VrConfig *config, double p_eps, VrEquilibrium **out);

/**
 * Releases an equilibrium handle. Null is ignored.
 *
 * # Safety
 * `eq` must come from `vr_solve_equilibrium` and not have been freed.
 */
void vr_equilibrium_free(VrEquilibrium *eq);

/**
 * Kind of a solved equilibrium.
 *
 * # Safety
 * `eq` must be a live equilibrium handle.
 */
VrEquilibriumKind vr_equilibrium_kind(const VrEquilibrium *eq);

/**
 * Measured ε of the equilibrium (zero for the exact kinds).
 *
 * # Safety
 * `eq` must be a live equilibrium handle.
 */
double vr_equilibrium_epsilon(const VrEquilibrium *eq);

/**
 * Common threshold of a symmetric equilibrium; NaN when absent.
 *
 * # Safety
 * `eq` must be a live equilibrium handle.
 */
double vr_equilibrium_x_star(const VrEquilibrium *eq);

/**
 * Threshold of one player's strategy: the switching state for threshold
 * strategies, 0 for constant-Min, 1 for constant-Max, NaN for
 * multi-breakpoint strategies or an out-of-range player.
 *
 * # Safety
 * `eq` must be a live equilibrium handle.
 */
double vr_equilibrium_threshold(const VrEquilibrium *eq, uintptr_t player);

/**
 * Discounted cost of one player under a threshold profile.
 *
 * # Safety
 * `config` must be a live handle; `thresholds` must point to `n_players`
 * doubles; `out_cost` and `out_tail_bound` must be writable or null.
 */
VrStatus vr_cost_quadrature(const VrConfig *config,
                            const double *thresholds,
                            uintptr_t player,
                            double *out_cost,
                            double *out_tail_bound);

/**
 * Best response of one player against opponents playing thresholds.
 * Writes up to `capacity` breakpoints of the reply into `out_breakpoints`
 * (ascending), the count into `out_len`, and the value at the start state
 * into `out_value`; each output pointer may be null.
 *
 * # Safety
 * `config` must be a live handle; `opponent_thresholds` must point to
 * `n_players` doubles; `out_breakpoints` must allow `capacity` writes.
 */
VrStatus vr_best_response(const VrConfig *config,
                          uintptr_t player,
                          const double *opponent_thresholds,
                          double *out_breakpoints,
                          uintptr_t capacity,
                          uintptr_t *out_len,
                          double *out_value);

/**
 * Simulates a threshold profile and writes the trajectory CSV to `path`.
 * `sample_dt <= 0` disables uniform sampling rows.
 *
 * # Safety
 * `config` must be a live handle; `thresholds` must point to `n_players`
 * doubles; `path` must be a valid NUL-terminated string.
 */
VrStatus vr_simulate_csv(const VrConfig *config,
                         const double *thresholds,
                         const char *path,
                         double sample_dt);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VIEWRACE_H */
