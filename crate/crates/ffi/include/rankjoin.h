#ifndef RANKJOIN_H
#define RANKJOIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>

/**
 * Status codes. Values 1 to 4 match the command-line exit codes.
 */
typedef enum {
  RJ_STATUS_OK = 0,
  RJ_STATUS_IO = 1,
  RJ_STATUS_INVALID = 2,
  RJ_STATUS_INCOMPATIBLE = 3,
  RJ_STATUS_TOO_LARGE = 4,
  /**
   * The cursor has no more results.
   */
  RJ_STATUS_EXHAUSTED = 5,
  /**
   * The record did not fit; `*out_len` holds the size needed.
   */
  RJ_STATUS_BUFFER_TOO_SMALL = 6,
  RJ_STATUS_NULL_ARGUMENT = 7,
  RJ_STATUS_PANIC = 8,
} RjStatus;

/**
 * A cursor over a job's results in rank order.
 */
typedef struct RjCursor RjCursor;

/**
 * A loaded query job.
 */
typedef struct RjJob RjJob;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads a job. `query` is the query text; `rank` a ranking spec such as
 * `tuple_sum` or `lex(x,y)`. `weight_cols` and `decomps` are comma
 * separated lists and may be NULL. On success `*out` owns a new job.
 *
 * # Safety
 * String arguments must be NULL or NUL-terminated; `out` must be writable.
 */
RjStatus rj_job_open(const char *query,
                     const char *data_dir,
                     const char *rank,
                     const char *weight_cols,
                     const char *decomps,
                     RjJob **out);

/**
 * # Safety
 * `job` must be NULL or a handle from [`rj_job_open`] not yet freed.
 */
void rj_job_free(RjJob *job);

/**
 * Writes the plan report to `*out` (free with [`rj_string_free`]).
 *
 * # Safety
 * `job` must be a live handle; `out` must be writable.
 */
RjStatus rj_plan_report(const RjJob *job, char **out);

/**
 * Prepares the job and opens a cursor. The cursor keeps the job alive, so
 * the job handle may be freed first.
 *
 * # Safety
 * `job` must be a live handle; `out` must be writable.
 */
RjStatus rj_cursor_open(const RjJob *job, RjCursor **out);

/**
 * Copies the next record (`score<TAB>v1,v2,...`, NUL-terminated) into
 * `buf`. `*out_len` receives the record length including the NUL. When the
 * buffer is too small nothing is consumed and the same record is returned by
 * the next call.
 *
 * # Safety
 * `cursor` must be a live handle; `buf` must hold `buf_len` bytes (or be
 * NULL with `buf_len` 0); `out_len` must be NULL or writable.
 */
RjStatus rj_cursor_next_record(RjCursor *cursor, char *buf, size_t buf_len, size_t *out_len);

/**
 * # Safety
 * `cursor` must be NULL or a handle from [`rj_cursor_open`] not yet freed.
 */
void rj_cursor_free(RjCursor *cursor);

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next failing call on the same thread.
 */
const char *rj_last_error_message(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library.
 */
void rj_string_free(char *s);

const char *rj_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RANKJOIN_H */
