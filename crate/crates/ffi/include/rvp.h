#ifndef RVP_H
#define RVP_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RvpStatus {
  RVP_STATUS_OK = 0,
  RVP_STATUS_NULL_POINTER = 1,
  RVP_STATUS_INVALID_UTF8 = 2,
  RVP_STATUS_VALIDATION = 3,
  RVP_STATUS_CONFIGURATION = 4,
  RVP_STATUS_PARSE = 5,
  RVP_STATUS_INTEGRATION_BLOWUP = 6,
  RVP_STATUS_UNDEFINED = 7,
  RVP_STATUS_RESOLUTION = 8,
  RVP_STATUS_COVERAGE = 9,
  RVP_STATUS_RESOURCE = 10,
  RVP_STATUS_CHECKPOINT = 11,
  RVP_STATUS_OUTPUT_EXISTS = 12,
  RVP_STATUS_IO = 13,
  RVP_STATUS_JSON = 14,
  /**
   * The session has not been run to its end time yet.
   */
  RVP_STATUS_NOT_RUN = 15,
  RVP_STATUS_PANIC = 99,
} RvpStatus;

/**
 * Parsed run configuration.
 */
typedef struct RvpConfig RvpConfig;

/**
 * A simulation in memory, optionally already run to its end time.
 */
typedef struct RvpSession RvpSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next fallible call on the same thread.
 */
const char *rvp_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rvp_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void rvp_string_free(char *s);

/**
 * Parse a TOML run configuration.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a writable pointer.
 */
enum RvpStatus rvp_config_parse(const char *text, struct RvpConfig **out);

/**
 * # Safety
 * `cfg` must be NULL or a handle from [`rvp_config_parse`] not yet freed.
 */
void rvp_config_free(struct RvpConfig *cfg);

/**
 * # Safety
 * `cfg` must be a live config handle.
 */
enum RvpStatus rvp_config_set_seed(struct RvpConfig *cfg, uint64_t seed);

/**
 * Canonical content hash (hex), or NULL on a NULL handle.
 *
 * # Safety
 * `cfg` must be NULL or a live config handle.
 */
char *rvp_config_hash(const struct RvpConfig *cfg);

/**
 * Run to the end time, writing artifacts to `out_dir` (NULL for the
 * default directory). On success `*dir_out`, if non-NULL, receives the
 * directory path.
 *
 * # Safety
 * `cfg` must be a live config handle; `out_dir` NULL or a valid string;
 * `dir_out` NULL or writable.
 */
enum RvpStatus rvp_run(const struct RvpConfig *cfg, const char *out_dir, char **dir_out);

/**
 * Sample the initial ensemble of `cfg`.
 *
 * # Safety
 * `cfg` must be a live config handle and `out` writable.
 */
enum RvpStatus rvp_session_new(const struct RvpConfig *cfg, struct RvpSession **out);

/**
 * Restore a session from checkpoint JSON.
 *
 * # Safety
 * `json` must be a valid string and `out` writable.
 */
enum RvpStatus rvp_session_from_checkpoint(const char *json, struct RvpSession **out);

/**
 * # Safety
 * `s` must be NULL or a session handle not yet freed.
 */
void rvp_session_free(struct RvpSession *s);

/**
 * Integrate to the configured end time and keep the outputs in memory.
 *
 * # Safety
 * `s` must be a live session handle.
 */
enum RvpStatus rvp_session_run(struct RvpSession *s);

/**
 * Steps taken so far, or 0 for a NULL handle.
 *
 * # Safety
 * `s` must be NULL or a live session handle.
 */
uint64_t rvp_session_step(const struct RvpSession *s);

/**
 * Current simulation time, or NaN for a NULL handle.
 *
 * # Safety
 * `s` must be NULL or a live session handle.
 */
double rvp_session_time(const struct RvpSession *s);

/**
 * # Safety
 * `s` must be NULL or a live session handle.
 */
size_t rvp_session_particle_count(const struct RvpSession *s);

/**
 * Diagnostics CSV of a finished session; NULL before [`rvp_session_run`].
 *
 * # Safety
 * `s` must be NULL or a live session handle.
 */
char *rvp_session_diagnostics_csv(const struct RvpSession *s);

/**
 * Checkpoint JSON of the current state.
 *
 * # Safety
 * `s` must be NULL or a live session handle.
 */
char *rvp_session_checkpoint_json(const struct RvpSession *s);

/**
 * Whether the session holds outputs from a completed run.
 *
 * # Safety
 * `s` must be NULL or a live session handle.
 */
enum RvpStatus rvp_session_status(const struct RvpSession *s);

/**
 * Smooth cutoff `phi(x)`.
 */
double rvp_phi(double x);

/**
 * Dyadic cutoff `phi(2^-l x)`.
 */
double rvp_cutoff_phi(double x, int32_t l);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RVP_H */
