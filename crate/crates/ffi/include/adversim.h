#ifndef ADVERSIM_H
#define ADVERSIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum AdversimStatus {
  ADVERSIM_STATUS_OK = 0,
  // A required pointer argument was null.
  ADVERSIM_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  ADVERSIM_STATUS_INVALID_UTF8 = 2,
  // The TOML configuration could not be parsed or validated.
  ADVERSIM_STATUS_CONFIG = 3,
  // A numeric parameter was out of range.
  ADVERSIM_STATUS_INVALID_ARGUMENT = 4,
  // The simulation or computation failed.
  ADVERSIM_STATUS_RUNTIME = 5,
  // The experiment has not been run yet.
  ADVERSIM_STATUS_NOT_RUN = 6,
  // An internal panic was caught at the boundary.
  ADVERSIM_STATUS_PANIC = 7,
} AdversimStatus;

// Opaque experiment handle.
typedef struct AdversimExperiment AdversimExperiment;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or an empty string.
// The pointer stays valid until the next call into the library.
const char *adversim_last_error(void);

// Releases a string returned by the library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void adversim_string_free(char *s);

// `2 sqrt(2) sqrt(R^2 sum sigma_t^2 / lambda)`.
//
// # Safety
// `sigma` must point to `len` doubles; `out` must be writable.
enum AdversimStatus adversim_variance_bound(double radius,
                                            double lambda,
                                            const double *sigma,
                                            size_t len,
                                            double *out);

// Variance bound on the `d`-simplex (`R^2 = ln d`, `lambda = 1`).
//
// # Safety
// As [`adversim_variance_bound`].
enum AdversimStatus adversim_variance_bound_simplex(size_t dimension,
                                                    const double *sigma,
                                                    size_t len,
                                                    double *out);

// `2 R delta sqrt(2 T / lambda)`.
//
// # Safety
// `out` must be writable.
enum AdversimStatus adversim_slow_change_bound(double radius,
                                               double lambda,
                                               double delta,
                                               size_t horizon,
                                               double *out);

// Slow-change bound on the `d`-simplex.
//
// # Safety
// `out` must be writable.
enum AdversimStatus adversim_slow_change_bound_simplex(size_t dimension,
                                                       double delta,
                                                       size_t horizon,
                                                       double *out);

// `2 + sqrt(2 T (4 ln T + ln(1/gamma)))`.
//
// # Safety
// `out` must be writable.
enum AdversimStatus adversim_smoothed_threshold_bound(size_t horizon, double gamma, double *out);

// One exponential-weights step; writes `n` normalized weights to `out`
// (which may alias `weights`).
//
// # Safety
// `weights`, `losses` and `out` must each hold `n` doubles.
enum AdversimStatus adversim_ew_step(const double *weights,
                                     const double *losses,
                                     size_t n,
                                     double eta,
                                     double *out);

// Parses a TOML configuration and selects experiment `id` (the first one
// when `id` is null).
//
// # Safety
// `toml` and a non-null `id` must be NUL-terminated; `out` must be writable.
enum AdversimStatus adversim_experiment_from_toml(const char *toml,
                                                  const char *id,
                                                  struct AdversimExperiment **out);

// Overrides the master seed; discards earlier results.
//
// # Safety
// `exp` must be a live handle.
enum AdversimStatus adversim_experiment_set_seed(struct AdversimExperiment *exp, uint64_t seed);

// Runs every replicate and checks the configured bound, if any.
//
// # Safety
// `exp` must be a live handle.
enum AdversimStatus adversim_experiment_run(struct AdversimExperiment *exp);

// Final regret of each replicate. Writes `min(cap, replicates)` values
// and stores the replicate count in `len`; pass `cap = 0` to query it.
//
// # Safety
// `out` must hold `cap` doubles (may be null when `cap` is 0).
enum AdversimStatus adversim_experiment_final_regrets(const struct AdversimExperiment *exp,
                                                      double *out,
                                                      size_t cap,
                                                      size_t *len);

// Writes 1 to `pass` when the bound held on every replicate, 0 when it
// failed; `Runtime` when the experiment has no bound.
//
// # Safety
// `exp` must be a live handle, `pass` writable.
enum AdversimStatus adversim_experiment_verdict(const struct AdversimExperiment *exp,
                                                int32_t *pass);

// Per-round CSV (`replicate,t,learner_loss,cum_regret,bound_value`).
//
// # Safety
// `exp` must be a live handle; free `*out` with [`adversim_string_free`].
enum AdversimStatus adversim_experiment_csv(const struct AdversimExperiment *exp, char **out);

// Summary JSON with the verdict.
//
// # Safety
// As [`adversim_experiment_csv`].
enum AdversimStatus adversim_experiment_summary_json(const struct AdversimExperiment *exp,
                                                     char **out);

// Releases an experiment. Null is ignored.
//
// # Safety
// `exp` must come from [`adversim_experiment_from_toml`] and not have been
// freed.
void adversim_experiment_free(struct AdversimExperiment *exp);

// Runs a verification suite and returns its verdict JSON in `out`; `pass`
// receives 1 or 0. Unknown suites give `InvalidArgument`.
//
// # Safety
// `name` must be NUL-terminated; `out` and `pass` writable.
enum AdversimStatus adversim_verify_suite(const char *name,
                                          uint64_t seed,
                                          char **out,
                                          int32_t *pass);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* ADVERSIM_H */
