#ifndef DDLINK_H
#define DDLINK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DdlStatus {
  DDL_STATUS_OK = 0,
  DDL_STATUS_NULL_POINTER = 1,
  DDL_STATUS_INVALID_ARGUMENT = 2,
  DDL_STATUS_CONFIG = 3,
  DDL_STATUS_NUMERIC = 4,
  DDL_STATUS_IO = 5,
  DDL_STATUS_PANIC = 6,
} DdlStatus;

/**
 * Opaque simulator configuration.
 */
typedef struct DdlConfig DdlConfig;

/**
 * Opaque sweep result.
 */
typedef struct DdlSweep DdlSweep;

/**
 * One sweep point. Statistics absent under the configured channel mode are NaN.
 */
typedef struct DdlSweepPoint {
  double rho_t_db;
  double p0;
  size_t trials;
  double se_hm_real_mean;
  double se_hm_real_stderr;
  double se_hm_ideal_mean;
  double se_hm_ideal_stderr;
  double gap_mean;
  double gap_stderr;
  double se_hm_at_lm_mean;
  double se_hm_at_lm_min;
  double se_lm_mean;
  double se_lm_min;
  double se_lm_worst;
  /**
   * Outage at the config's `R_th`.
   */
  double outage_real;
  double outage_ideal;
} DdlSweepPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *ddl_last_error(void);

/**
 * Static version string.
 */
const char *ddl_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, freed at most once.
 */
void ddl_string_free(char *s);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum DdlStatus ddl_config_default(struct DdlConfig **out);

/**
 * Parses and validates a JSON config document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` valid for writes.
 */
enum DdlStatus ddl_config_from_json(const char *json, struct DdlConfig **out);

/**
 * Resolved config as pretty JSON; free with `ddl_string_free`.
 *
 * # Safety
 * `cfg` must be a live handle and `out` valid for writes.
 */
enum DdlStatus ddl_config_to_json(const struct DdlConfig *cfg, char **out);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum DdlStatus ddl_config_set_trials(struct DdlConfig *cfg, size_t trials);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum DdlStatus ddl_config_set_seed(struct DdlConfig *cfg, uint64_t seed);

/**
 * # Safety
 * `cfg` must be NULL or a handle from this library, freed at most once.
 */
void ddl_config_free(struct DdlConfig *cfg);

/**
 * Runs a sweep over `p0_values` and the config's SNR grid. Results do not
 * depend on `workers`.
 *
 * # Safety
 * `cfg` must be a live handle, `p0_values` must point to `n_p0` doubles and
 * `out` must be valid for writes.
 */
enum DdlStatus ddl_run_sweep(const struct DdlConfig *cfg,
                             const double *p0_values,
                             size_t n_p0,
                             size_t workers,
                             struct DdlSweep **out);

/**
 * # Safety
 * `sweep` must be a live handle and `out` valid for writes.
 */
enum DdlStatus ddl_sweep_len(const struct DdlSweep *sweep, size_t *out);

/**
 * # Safety
 * `sweep` must be a live handle and `out` valid for writes.
 */
enum DdlStatus ddl_sweep_point(const struct DdlSweep *sweep,
                               size_t index,
                               struct DdlSweepPoint *out);

/**
 * HM sweep rows in the `hm-sweep` CSV schema; free with `ddl_string_free`.
 *
 * # Safety
 * `sweep` must be a live handle and `out` valid for writes.
 */
enum DdlStatus ddl_sweep_hm_csv(const struct DdlSweep *sweep, char **out);

/**
 * # Safety
 * `sweep` must be NULL or a handle from this library, freed at most once.
 */
void ddl_sweep_free(struct DdlSweep *sweep);

/**
 * Leakage coefficient of Doppler offset `q` for fractional Doppler `kappa`
 * on an `n`-bin Doppler axis.
 *
 * # Safety
 * `re` and `im` must be valid for writes.
 */
enum DdlStatus ddl_subpath_ratio(int64_t q, double kappa, size_t n, double *re, double *im);

/**
 * HM detection SNR from the spectrum averages.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum DdlStatus ddl_hm_snr(double omega_e,
                          double omega_f,
                          double omega_0,
                          double p0,
                          double rho_t,
                          double *out);

/**
 * `log2(1 + gamma)`.
 */
double ddl_spectral_efficiency(double gamma);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DDLINK_H */
