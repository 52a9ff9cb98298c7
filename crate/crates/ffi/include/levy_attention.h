#ifndef LEVY_ATTENTION_H
#define LEVY_ATTENTION_H

/* Generated by cbindgen from crates/ffi. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LaStatus {
  LA_STATUS_OK = 0,
  LA_STATUS_NULL_POINTER = 1,
  LA_STATUS_INVALID_PARAMETER = 2,
  LA_STATUS_FIT = 3,
  LA_STATUS_SWEEP = 4,
  LA_STATUS_INFERENCE = 5,
  LA_STATUS_PARSE = 6,
  LA_STATUS_SCHEMA = 7,
  LA_STATUS_IO = 8,
  LA_STATUS_OUT_OF_RANGE = 9,
  LA_STATUS_PANIC = 10,
} LaStatus;

/**
 * Simulated session with its attention flow network.
 */
typedef struct LaSession LaSession;

/**
 * Response surface loaded from JSON.
 */
typedef struct LaSurface LaSurface;

typedef struct LaSimConfig {
  size_t n_walkers;
  double p;
  double lambda;
  double l_min;
  double l_max;
  bool seed_origin;
  bool origin_trial;
  uint64_t max_ticks;
  uint64_t rng_seed;
} LaSimConfig;

typedef struct LaMetrics {
  uint64_t activity;
  uint64_t diversity;
  uint64_t edges;
  uint64_t n_walkers;
} LaMetrics;

typedef struct LaScalingFit {
  double exponent;
  double prefactor;
  double r_squared;
  double std_err;
  size_t n_points;
} LaScalingFit;

typedef struct LaExponentSet {
  struct LaScalingFit alpha;
  struct LaScalingFit beta;
  struct LaScalingFit gamma;
  struct LaScalingFit theta;
} LaExponentSet;

typedef struct LaInferred {
  double p_hat;
  double lambda_hat;
  double distance;
  double gamma_model;
  size_t p_index;
  size_t lambda_index;
} LaInferred;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Most recent error message on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *la_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *la_version(void);

/**
 * Fills `out` with the library defaults: 100 walkers, p = 0.5, λ = 2,
 * jumps in [1, 1000], seeded origin with deposit trial, seed 0.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `LaSimConfig`.
 */
enum LaStatus la_sim_config_default(struct LaSimConfig *out);

/**
 * Runs one session. On success `*out` receives a handle to release with
 * `la_session_free`.
 *
 * # Safety
 * `config` must point to a valid `LaSimConfig`; `out` must be writable.
 */
enum LaStatus la_session_run(const struct LaSimConfig *config, struct LaSession **out);

/**
 * # Safety
 * `session` must be null or a handle from `la_session_run` not yet freed.
 */
void la_session_free(struct LaSession *session);

/**
 * # Safety
 * `session` must be a live handle and `out` writable.
 */
enum LaStatus la_session_metrics(const struct LaSession *session, struct LaMetrics *out);

/**
 * Termination tick and whether the tick cap was hit.
 *
 * # Safety
 * `session` must be a live handle; `t_end` and `truncated` writable.
 */
enum LaStatus la_session_termination(const struct LaSession *session,
                                     uint64_t *t_end,
                                     bool *truncated);

/**
 * # Safety
 * `session` must be a live handle and `out` writable.
 */
enum LaStatus la_session_active_sites(const struct LaSession *session, size_t *out);

/**
 * # Safety
 * `session` must be a live handle and `out` writable.
 */
enum LaStatus la_session_trajectory_len(const struct LaSession *session,
                                        size_t walker,
                                        size_t *out);

/**
 * Copies up to `capacity` sites of one trajectory into `xy` as
 * interleaved `x, y` pairs (so `xy` holds `2 * capacity` values) and
 * stores the number of sites copied in `written`.
 *
 * # Safety
 * `session` must be a live handle, `xy` valid for `2 * capacity` writes
 * (may be null when `capacity` is 0), `written` writable.
 */
enum LaStatus la_session_trajectory(const struct LaSession *session,
                                    size_t walker,
                                    int64_t *xy,
                                    size_t capacity,
                                    size_t *written);

/**
 * # Safety
 * `session` must be a live handle and `out` writable.
 */
enum LaStatus la_session_flow_balanced(const struct LaSession *session, bool *out);

/**
 * Writes the session as JSON lines (header record, then one per walker).
 *
 * # Safety
 * `session` must be a live handle; `path` a NUL-terminated UTF-8 string.
 */
enum LaStatus la_session_write_jsonl(const struct LaSession *session, const char *path);

/**
 * Writes the network as a `from,to,weight` edge list.
 *
 * # Safety
 * `session` must be a live handle; `path` a NUL-terminated UTF-8 string.
 */
enum LaStatus la_session_write_edges_csv(const struct LaSession *session, const char *path);

/**
 * # Safety
 * `out` must be writable.
 */
enum LaStatus la_step_quantile(double u, double lambda, double l_min, double l_max, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum LaStatus la_step_cdf(double l, double lambda, double l_min, double l_max, double *out);

/**
 * Log-log least squares through `(x[i], y[i])`.
 *
 * # Safety
 * `x` and `y` must be valid for `n` reads; `out` writable.
 */
enum LaStatus la_fit_power_law(const double *x,
                               const double *y,
                               size_t n,
                               struct LaScalingFit *out);

/**
 * Sweeps `n_list` sizes at the template's `(p, λ)` with `replicates`
 * sessions each, seeding from the template's `rng_seed`.
 *
 * # Safety
 * `config` must be valid, `n_list` valid for `n_len` reads, `out` writable.
 */
enum LaStatus la_sweep_exponents(const struct LaSimConfig *config,
                                 const size_t *n_list,
                                 size_t n_len,
                                 size_t replicates,
                                 struct LaExponentSet *out);

/**
 * Loads a response surface JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string; `out` writable.
 */
enum LaStatus la_surface_load(const char *path, struct LaSurface **out);

/**
 * # Safety
 * `surface` must be null or a handle from `la_surface_load` not yet freed.
 */
void la_surface_free(struct LaSurface *surface);

/**
 * Grid dimensions.
 *
 * # Safety
 * `surface` must be a live handle; `n_p` and `n_lambda` writable.
 */
enum LaStatus la_surface_dims(const struct LaSurface *surface, size_t *n_p, size_t *n_lambda);

/**
 * Nearest grid cell to the observed `(α, β, θ)`.
 *
 * # Safety
 * `surface` must be a live handle and `out` writable.
 */
enum LaStatus la_surface_infer(const struct LaSurface *surface,
                               double alpha,
                               double beta,
                               double theta,
                               struct LaInferred *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEVY_ATTENTION_H */
