#ifndef SYMCOORD_H
#define SYMCOORD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SymcoordStatus {
  SYMCOORD_STATUS_OK = 0,
  SYMCOORD_STATUS_NULL_POINTER = 1,
  SYMCOORD_STATUS_INVALID_ARGUMENT = 2,
  SYMCOORD_STATUS_CONFIGURATION = 3,
  SYMCOORD_STATUS_DOMAIN = 4,
  SYMCOORD_STATUS_DIVERGED = 5,
  SYMCOORD_STATUS_EXPERIMENT = 6,
  SYMCOORD_STATUS_NUMERIC = 7,
  SYMCOORD_STATUS_IO = 8,
  SYMCOORD_STATUS_PANIC = 9,
} SymcoordStatus;

// A catalog model in one chart.
typedef struct SymcoordModel SymcoordModel;

// A stored trajectory.
typedef struct SymcoordTrajectory SymcoordTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, empty after a success.
// Valid until the next call on the same thread.
const char *symcoord_last_error(void);

// Builds a Hamiltonian catalog model.
//
// `coords` may be null for the model's default chart. `params` is null or a
// comma-separated `key=value` list. `h` is the step size for step-dependent
// charts and is ignored when not positive.
//
// # Safety
// String arguments must be null or NUL-terminated; `out` must be writable.
enum SymcoordStatus symcoord_model_new(const char *name,
                                       const char *coords,
                                       const char *params,
                                       double h,
                                       struct SymcoordModel **out);

// # Safety
// `m` must come from [`symcoord_model_new`] and not be used afterwards.
void symcoord_model_free(struct SymcoordModel *m);

// Degrees of freedom; the phase-space dimension is twice this.
//
// # Safety
// `m` must be a live model and `out` writable.
enum SymcoordStatus symcoord_model_dof(const struct SymcoordModel *m, size_t *out);

// Model default initial state `(q, p)` in the model's chart.
//
// # Safety
// `out` must hold `out_len` doubles.
enum SymcoordStatus symcoord_model_default_state(const struct SymcoordModel *m,
                                                 double *out,
                                                 size_t out_len);

// `H(z)` with `z = (q, p)`.
//
// # Safety
// `z` must hold `len` doubles and `out` be writable.
enum SymcoordStatus symcoord_energy(const struct SymcoordModel *m,
                                    const double *z,
                                    size_t len,
                                    double *out);

// `(H_q, H_p)` at `z`.
//
// # Safety
// `z` must hold `len` doubles and `out` `out_len` doubles.
enum SymcoordStatus symcoord_gradient(const struct SymcoordModel *m,
                                      const double *z,
                                      size_t len,
                                      double *out,
                                      size_t out_len);

// Maps an original-chart state into the model's chart (`forward != 0`) or
// back.
//
// # Safety
// `z` must hold `len` doubles and `out` `out_len` doubles.
enum SymcoordStatus symcoord_chart_map(const struct SymcoordModel *m,
                                       int32_t forward,
                                       const double *z,
                                       size_t len,
                                       double *out,
                                       size_t out_len);

// `H_p · H_q` at `z`.
//
// # Safety
// `z` must hold `len` doubles and `out` be writable.
enum SymcoordStatus symcoord_elementary_hpq(const struct SymcoordModel *m,
                                            const double *z,
                                            size_t len,
                                            double *out);

// `δ` at `z` for a named point transform (`cartesian-to-polar`,
// `polar-to-cartesian` or `oscillator`).
//
// # Safety
// `transform` must be NUL-terminated, `z` hold `len` doubles and `out` be
// writable.
enum SymcoordStatus symcoord_delta_hpq(const struct SymcoordModel *m,
                                       const char *transform,
                                       const double *z,
                                       size_t len,
                                       double *out);

// Integrates `n_steps` steps of size `h` with a named method from `z0`.
// Divergence ends the trajectory early instead of failing.
//
// # Safety
// `method` must be NUL-terminated, `z0` hold `len` doubles and `out` be
// writable.
enum SymcoordStatus symcoord_solve(const struct SymcoordModel *m,
                                   const char *method,
                                   const double *z0,
                                   size_t len,
                                   double h,
                                   size_t n_steps,
                                   struct SymcoordTrajectory **out);

// # Safety
// `t` must come from [`symcoord_solve`] and not be used afterwards.
void symcoord_trajectory_free(struct SymcoordTrajectory *t);

// Number of stored states, or 0 for a null handle.
//
// # Safety
// `t` must be null or a live trajectory.
size_t symcoord_trajectory_len(const struct SymcoordTrajectory *t);

// Index of the first state that failed, or -1 when the run completed.
//
// # Safety
// `t` must be null or a live trajectory.
int64_t symcoord_trajectory_diverged_at(const struct SymcoordTrajectory *t);

// Time and `(q, p)` of stored state `index`.
//
// # Safety
// `t` must be a live trajectory, `time` writable or null, and `out` hold
// `out_len` doubles.
enum SymcoordStatus symcoord_trajectory_state(const struct SymcoordTrajectory *t,
                                              size_t index,
                                              double *time,
                                              double *out,
                                              size_t out_len);

// Runs an experiment described by a TOML document and returns its CSV.
// The string must be released with [`symcoord_string_free`].
//
// # Safety
// `toml` must be NUL-terminated and `csv_out` writable.
enum SymcoordStatus symcoord_run_experiment(const char *toml, char **csv_out);

// # Safety
// `s` must come from this library and not be used afterwards.
void symcoord_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYMCOORD_H */
