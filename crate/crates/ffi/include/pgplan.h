#ifndef PGPLAN_H
#define PGPLAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum PgStatus {
  PG_STATUS_OK = 0,
  PG_STATUS_NULL_POINTER = 1,
  PG_STATUS_INVALID_UTF8 = 2,
  PG_STATUS_INVALID_ARGUMENT = 3,
  /**
   * Scenario file unreadable or malformed.
   */
  PG_STATUS_SCENARIO = 4,
  /**
   * The planner exhausted its budget; the trial handle is still valid.
   */
  PG_STATUS_NO_PATH = 5,
  /**
   * The buffer passed in is too small; the required length was written.
   */
  PG_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * Collision, model or numeric failure inside the library.
   */
  PG_STATUS_FAILED = 7,
  /**
   * A panic was caught at the boundary.
   */
  PG_STATUS_INTERNAL = 8,
} PgStatus;

/**
 * Sampling strategy for [`pg_plan`].
 */
typedef enum PgSampler {
  PG_SAMPLER_UNIFORM = 0,
  PG_SAMPLER_GOAL_BIAS = 1,
  PG_SAMPLER_PRIOR = 2,
} PgSampler;

/**
 * Loaded scenario: robot, obstacles, queries and parameters.
 */
typedef struct PgScenario PgScenario;

/**
 * Outcome of one planning trial.
 */
typedef struct PgTrial PgTrial;

/**
 * Per-stage path metrics of an optimized trial. Fields are zero when the
 * optimizer did not run.
 */
typedef struct PgStageMetrics {
  size_t raw_nodes;
  double raw_len_rad;
  size_t shortcut_nodes;
  double shortcut_len_rad;
  size_t dp_nodes;
  size_t refined_joints;
} PgStageMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * failing call on the same thread; do not free.
 */
const char *pg_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pg_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void pg_string_free(char *s);

/**
 * Loads a scenario from a file path or a builtin name.
 *
 * # Safety
 * `source` must be a NUL-terminated string; `out` must be writable.
 */
enum PgStatus pg_scenario_load(const char *source, struct PgScenario **out);

/**
 * Parses a scenario from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum PgStatus pg_scenario_from_json(const char *json, struct PgScenario **out);

/**
 * Releases a scenario. Null is ignored.
 *
 * # Safety
 * `scn` must come from a `pg_scenario_*` constructor and not have been freed.
 */
void pg_scenario_free(struct PgScenario *scn);

/**
 * Number of joints across all chains; 0 for null.
 *
 * # Safety
 * `scn` must be null or a live scenario.
 */
size_t pg_scenario_dim(const struct PgScenario *scn);

/**
 * Number of planning queries; 0 for null.
 *
 * # Safety
 * `scn` must be null or a live scenario.
 */
size_t pg_scenario_query_count(const struct PgScenario *scn);

/**
 * Writes whether configuration `q` (length `dim`) is collision-free.
 *
 * # Safety
 * `scn` must be a live scenario, `q` must hold `dim` doubles and `out_free`
 * must be writable.
 */
enum PgStatus pg_config_is_free(const struct PgScenario *scn,
                                const double *q,
                                size_t dim,
                                bool *out_free);

/**
 * Writes whether the straight joint-space motion from `a` to `b` is
 * collision-free when checked every `resolution` radians.
 *
 * # Safety
 * `scn` must be a live scenario, `a` and `b` must hold `dim` doubles and
 * `out_free` must be writable.
 */
enum PgStatus pg_segment_is_free(const struct PgScenario *scn,
                                 const double *a,
                                 const double *b,
                                 size_t dim,
                                 double resolution,
                                 bool *out_free);

/**
 * Plans query `query_index` with the given sampler and seed, then runs the
 * optimizer on success. Writes a trial handle even when no path was found,
 * in which case [`PgStatus::NoPath`] is returned.
 *
 * # Safety
 * `scn` must be a live scenario and `out` must be writable.
 */
enum PgStatus pg_plan(const struct PgScenario *scn,
                      size_t query_index,
                      enum PgSampler sampler,
                      uint64_t seed,
                      bool optimize,
                      struct PgTrial **out);

/**
 * Releases a trial. Null is ignored.
 *
 * # Safety
 * `trial` must come from [`pg_plan`] and not have been freed.
 */
void pg_trial_free(struct PgTrial *trial);

/**
 * True when the trial found a path; false for null.
 *
 * # Safety
 * `trial` must be null or a live trial.
 */
bool pg_trial_success(const struct PgTrial *trial);

/**
 * Nodes added to both trees, roots excluded; 0 for null.
 *
 * # Safety
 * `trial` must be null or a live trial.
 */
size_t pg_trial_extended_nodes(const struct PgTrial *trial);

/**
 * Writes the stage metrics; all zero when the optimizer did not run.
 *
 * # Safety
 * `trial` must be a live trial and `out` must be writable.
 */
enum PgStatus pg_trial_metrics(const struct PgTrial *trial, struct PgStageMetrics *out);

/**
 * Copies the planner path (`optimized` false) or the optimized control
 * polygon (`optimized` true) into `buf` as row-major waypoints. Writes the
 * number of doubles required to `out_len`; when `buf_len` is smaller,
 * nothing is copied and [`PgStatus::BufferTooSmall`] is returned. Pass a
 * null `buf` with `buf_len` 0 to query the size.
 *
 * # Safety
 * `trial` must be a live trial, `buf` must hold `buf_len` writable doubles
 * and `out_len` must be writable.
 */
enum PgStatus pg_trial_waypoints(const struct PgTrial *trial,
                                 bool optimized,
                                 double *buf,
                                 size_t buf_len,
                                 size_t *out_len);

/**
 * Serializes the full trial record as JSON into a new string owned by the
 * caller.
 *
 * # Safety
 * `trial` must be a live trial and `out` must be writable.
 */
enum PgStatus pg_trial_to_json(const struct PgTrial *trial, char **out);

/**
 * Fits a `k`-component mixture to `count` points of dimension `dim` stored
 * row-major in `data`, and returns the model as JSON.
 *
 * # Safety
 * `data` must hold `count * dim` doubles and `out` must be writable.
 */
enum PgStatus pg_fit_gmm(const double *data,
                         size_t count,
                         size_t dim,
                         size_t k,
                         uint64_t seed,
                         char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PGPLAN_H */
