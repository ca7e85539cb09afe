#ifndef CHOSEN_PATH_H
#define CHOSEN_PATH_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; zero is success, errors are negative.
 */
typedef enum CpStatus {
  CP_STATUS_OK = 0,
  CP_STATUS_NULL_POINTER = -1,
  CP_STATUS_INVALID_ARGUMENT = -2,
  CP_STATUS_UNSORTED_SET = -3,
  CP_STATUS_EMPTY_POINT = -4,
  CP_STATUS_NO_POINTS = -5,
  CP_STATUS_IO = -6,
  CP_STATUS_SNAPSHOT = -7,
  CP_STATUS_UNDEFINED = -8,
  CP_STATUS_PANIC = -9,
} CpStatus;

/**
 * Similarity measures accepted by [`cp_similarity`].
 */
typedef enum CpMeasure {
  CP_MEASURE_BRAUN_BLANQUET = 0,
  CP_MEASURE_JACCARD = 1,
  CP_MEASURE_COSINE = 2,
  CP_MEASURE_NORMALIZED_HAMMING = 3,
} CpMeasure;

/**
 * Opaque index handle.
 */
typedef struct CpIndexHandle CpIndexHandle;

/**
 * Outcome of one query. `found` is 1 when `id` and `similarity` are set.
 */
typedef struct CpQueryResult {
  int32_t found;
  uint32_t id;
  double similarity;
  uint64_t candidates_scanned;
  uint64_t buckets_probed;
} CpQueryResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call on the same thread.
 */
const char *cp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cp_version(void);

/**
 * Builds an index over `n_points` sets stored back to back in `elements`;
 * point `i` is `elements[offsets[i] .. offsets[i + 1]]`, so `offsets` has
 * `n_points + 1` entries. Each set must be strictly increasing. `reps = 0`
 * selects the default repetition count.
 *
 * # Safety
 * Pointers must be valid for the lengths implied above; `out` must be
 * writable.
 */
enum CpStatus cp_index_build(const uint32_t *elements,
                             const size_t *offsets,
                             size_t n_points,
                             double b1,
                             double b2,
                             size_t reps,
                             uint64_t seed,
                             struct CpIndexHandle **out);

/**
 * Queries with a strictly increasing set of `len` elements.
 *
 * # Safety
 * `index` must come from this library; `query` must hold `len` values;
 * `out` must be writable.
 */
enum CpStatus cp_index_query(const struct CpIndexHandle *index,
                             const uint32_t *query,
                             size_t len,
                             struct CpQueryResult *out);

/**
 * Number of indexed points.
 *
 * # Safety
 * `index` must come from this library; `out` must be writable.
 */
enum CpStatus cp_index_len(const struct CpIndexHandle *index, size_t *out);

/**
 * Writes a snapshot to `path`.
 *
 * # Safety
 * `index` must come from this library; `path` must be a NUL-terminated
 * string.
 */
enum CpStatus cp_index_save(const struct CpIndexHandle *index, const char *path);

/**
 * Loads a snapshot written by [`cp_index_save`] or the command-line tool.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CpStatus cp_index_load(const char *path, struct CpIndexHandle **out);

/**
 * Releases an index. Null is ignored.
 *
 * # Safety
 * `index` must come from this library and not be used afterwards.
 */
void cp_index_free(struct CpIndexHandle *index);

/**
 * Similarity of two strictly increasing sets.
 *
 * # Safety
 * `x` and `y` must hold `x_len` and `y_len` values; `out` must be writable.
 */
enum CpStatus cp_similarity(enum CpMeasure measure,
                            const uint32_t *x,
                            size_t x_len,
                            const uint32_t *y,
                            size_t y_len,
                            double *out);

/**
 * `ln(1/b1) / ln(1/b2)` for `0 < b2 < b1 < 1`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CpStatus cp_rho(double b1, double b2, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHOSEN_PATH_H */
