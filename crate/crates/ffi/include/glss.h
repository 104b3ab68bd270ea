#ifndef GLSS_H
#define GLSS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GlssStatus {
  GLSS_STATUS_OK = 0,
  GLSS_STATUS_NULL_POINTER = 1,
  GLSS_STATUS_INVALID_ARGUMENT = 2,
  GLSS_STATUS_FORMAT = 3,
  GLSS_STATUS_UNSTABLE = 4,
  GLSS_STATUS_NUMERICAL = 5,
  GLSS_STATUS_HYPOTHESIS = 6,
  GLSS_STATUS_IO = 7,
  GLSS_STATUS_BUFFER_TOO_SMALL = 8,
  GLSS_STATUS_PANIC = 9,
} GlssStatus;

// Trajectory signals addressable through the C API.
typedef enum GlssProcess {
  GLSS_PROCESS_U = 0,
  GLSS_PROCESS_PI = 1,
  GLSS_PROCESS_V = 2,
  GLSS_PROCESS_X = 3,
  GLSS_PROCESS_Y = 4,
} GlssProcess;

// Opaque model handle.
typedef struct GlssModel GlssModel;

// Opaque trajectory handle.
typedef struct GlssTrajectory GlssTrajectory;

typedef struct GlssDims {
  size_t nx;
  size_t nu;
  size_t ny;
  size_t nn;
  // Number of letters of the switching alphabet.
  size_t letters;
} GlssDims;

typedef struct GlssSeeds {
  uint64_t switching;
  uint64_t input;
  uint64_t noise;
} GlssSeeds;

typedef struct GlssRankSummary {
  size_t nx;
  size_t observability_rank;
  size_t reachability_rank;
  // 1 when both ranks equal `nx`.
  int minimal;
} GlssRankSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next call into the library on this thread.
const char *glss_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *glss_version(void);

// Parses a model document.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum GlssStatus glss_model_from_json(const char *json, struct GlssModel **out);

// Serializes a model; free the result with [`glss_string_free`].
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum GlssStatus glss_model_to_json(const struct GlssModel *model, char **out);

// # Safety
// `s` must come from this library or be null.
void glss_string_free(char *s);

// # Safety
// `model` must come from this library or be null; it is invalid afterwards.
void glss_model_free(struct GlssModel *model);

// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum GlssStatus glss_model_dims(const struct GlssModel *model, struct GlssDims *out);

// Spectral radius of `Σ_σ p_σ A_σ ⊗ A_σ`.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum GlssStatus glss_model_stability_radius(const struct GlssModel *model, double *out);

// Sets `*passed` to 1 when the model is a stationary GLSS, else 0. The
// names of the failing checks are left in the last-error message.
//
// # Safety
// `model` must be a live handle and `passed` a valid pointer.
enum GlssStatus glss_model_validate(const struct GlssModel *model, int *passed);

// Simulates `horizon` samples. A negative `burn_in` selects the default
// derived from the stability radius.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum GlssStatus glss_simulate(const struct GlssModel *model,
                              size_t horizon,
                              int64_t burn_in,
                              struct GlssSeeds seeds,
                              struct GlssTrajectory **out);

// Number of samples.
//
// # Safety
// `traj` must be a live handle or null (which yields 0).
size_t glss_trajectory_len(const struct GlssTrajectory *traj);

// Rows (signal dimension) of one process.
//
// # Safety
// `traj` must be a live handle and `rows` a valid pointer.
enum GlssStatus glss_trajectory_rows(const struct GlssTrajectory *traj,
                                     enum GlssProcess which,
                                     size_t *rows);

// Copies one process into `buf`, sample by sample:
// `buf[t * rows + i]` is component `i` at time `t`. `len` must be at
// least `rows * glss_trajectory_len(traj)`.
//
// # Safety
// `traj` must be a live handle and `buf` valid for `len` writes.
enum GlssStatus glss_trajectory_copy(const struct GlssTrajectory *traj,
                                     enum GlssProcess which,
                                     double *buf,
                                     size_t len);

// # Safety
// `traj` must come from this library or be null; it is invalid afterwards.
void glss_trajectory_free(struct GlssTrajectory *traj);

// Innovation-form realization of `model`. `closed_loop_radius` may be null.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum GlssStatus glss_innovation_form(const struct GlssModel *model,
                                     double tolerance,
                                     struct GlssModel **out,
                                     double *closed_loop_radius);

// Rank test of the observability and reachability matrices.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum GlssStatus glss_check_minimality(const struct GlssModel *model,
                                      double rank_tolerance,
                                      struct GlssRankSummary *out);

// Searches `T` with `x̂ = T x` mapping `s` onto `s_hat`. On success
// `*found` is 1 or 0; when found and `t` is non-null the `nx × nx` matrix
// is written row-major to `t`, which must hold `t_len >= nx * nx` values.
// `max_residual` may be null. A violated hypothesis of the matching
// theorem returns [`GlssStatus::Hypothesis`].
//
// # Safety
// `s` and `s_hat` must be live handles, `found` a valid pointer and `t`
// null or valid for `t_len` writes.
enum GlssStatus glss_find_isomorphism(const struct GlssModel *s,
                                      const struct GlssModel *s_hat,
                                      double tolerance,
                                      int *found,
                                      double *t,
                                      size_t t_len,
                                      double *max_residual);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GLSS_H */
