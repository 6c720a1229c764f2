#ifndef SNN_H
#define SNN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum SnnStatus {
  SNN_STATUS_OK = 0,
  SNN_STATUS_NULL_POINTER = 1,
  SNN_STATUS_INVALID_ARGUMENT = 2,
  SNN_STATUS_DIMENSION_MISMATCH = 3,
  SNN_STATUS_EMPTY_DATASET = 4,
  SNN_STATUS_IO = 5,
  SNN_STATUS_FORMAT = 6,
  SNN_STATUS_PANIC = 7,
} SnnStatus;

// Opaque index handle.
typedef struct SnnIndex SnnIndex;

// Opaque query result: hit ids (ascending) and their distances.
typedef struct SnnResult SnnResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until
// the next call into this library from the same thread.
const char *snn_last_error_message(void);

// Static description of a status code; unknown codes get a generic text.
const char *snn_status_string(int32_t status);

// Builds an index over `n` points of dimension `d`.
//
// # Safety
// `data` must point to `n * d` readable doubles and `out` must be writable.
enum SnnStatus snn_index_build(const double *data, size_t n, size_t d, struct SnnIndex **out);

// Releases an index. Null is ignored.
//
// # Safety
// `index` must come from this library and not be used afterwards.
void snn_index_free(struct SnnIndex *index);

// Number of indexed points.
//
// # Safety
// `index` must be a live handle and `out` writable.
enum SnnStatus snn_index_len(const struct SnnIndex *index, size_t *out);

// Dimension of the indexed points.
//
// # Safety
// `index` must be a live handle and `out` writable.
enum SnnStatus snn_index_dim(const struct SnnIndex *index, size_t *out);

// Inserts one point of dimension `d`; its id is written to `out_id`.
//
// # Safety
// `index` must be a live handle, `point` must hold `d` doubles and
// `out_id` must be writable or null.
enum SnnStatus snn_index_append(struct SnnIndex *index,
                                const double *point,
                                size_t d,
                                size_t *out_id);

// Writes the index to `path` in the binary index format.
//
// # Safety
// `index` must be a live handle and `path` a NUL-terminated string.
enum SnnStatus snn_index_save(const struct SnnIndex *index, const char *path);

// Loads an index saved by [`snn_index_save`] or the command-line tool.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum SnnStatus snn_index_load(const char *path, struct SnnIndex **out);

// All indexed points within Euclidean distance `radius` of `query`.
//
// # Safety
// `index` must be a live handle, `query` must hold `d` doubles and `out`
// must be writable.
enum SnnStatus snn_query_radius(const struct SnnIndex *index,
                                const double *query,
                                size_t d,
                                double radius,
                                struct SnnResult **out);

// Number of hits in a result; 0 for null.
//
// # Safety
// `result` must be a live handle or null.
size_t snn_result_len(const struct SnnResult *result);

// Hit ids in ascending order, valid until the result is freed.
//
// # Safety
// `result` must be a live handle or null.
const size_t *snn_result_ids(const struct SnnResult *result);

// Hit distances, parallel to [`snn_result_ids`].
//
// # Safety
// `result` must be a live handle or null.
const double *snn_result_dists(const struct SnnResult *result);

// Releases a result. Null is ignored.
//
// # Safety
// `result` must come from this library and not be used afterwards.
void snn_result_free(struct SnnResult *result);

// DBSCAN over `n` points. Writes one label per point into `labels`
// (`-1` marks noise) and the cluster count into `clusters`.
// `use_bruteforce` selects the exhaustive neighbor backend.
//
// # Safety
// `data` must hold `n * d` doubles, `labels` must have room for `n`
// values and `clusters` must be writable or null.
enum SnnStatus snn_dbscan(const double *data,
                          size_t n,
                          size_t d,
                          double eps,
                          size_t min_samples,
                          bool use_bruteforce,
                          int64_t *labels,
                          size_t *clusters);

// Gaussian-blob model probabilities for offset `c`, radius `radius`,
// elongation `s` and dimension `d`. Any output pointer may be null.
//
// # Safety
// Non-null output pointers must be writable.
enum SnnStatus snn_model(double c,
                         double radius,
                         double s,
                         size_t d,
                         double *p1,
                         double *p2,
                         double *ratio);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SNN_H */
