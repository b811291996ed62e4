#ifndef FBLMNN_H
#define FBLMNN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum FblmnnStatus {
  FBLMNN_STATUS_OK = 0,
  FBLMNN_STATUS_NULL_POINTER = 1,
  FBLMNN_STATUS_INVALID_ARGUMENT = 2,
  FBLMNN_STATUS_DIMENSION_MISMATCH = 3,
  FBLMNN_STATUS_NOT_POSITIVE_SEMIDEFINITE = 4,
  FBLMNN_STATUS_MISSING_FILE = 5,
  FBLMNN_STATUS_PARSE_ERROR = 6,
  FBLMNN_STATUS_INVALID_DATA = 7,
  FBLMNN_STATUS_NUMERICAL_FAILURE = 8,
  FBLMNN_STATUS_IO_ERROR = 9,
  FBLMNN_STATUS_PANIC = 10,
} FblmnnStatus;

typedef enum FblmnnMode {
  FBLMNN_MODE_SP = 0,
  FBLMNN_MODE_MP = 1,
  FBLMNN_MODE_FB = 2,
} FblmnnMode;

typedef enum FblmnnMethod {
  FBLMNN_METHOD_KNN = 0,
  FBLMNN_METHOD_SP_LMNN = 1,
  FBLMNN_METHOD_MP_LMNN = 2,
  FBLMNN_METHOD_FB_LMNN = 3,
} FblmnnMethod;

// Opaque labeled dataset.
typedef struct FblmnnDataset FblmnnDataset;

// Opaque Mahalanobis metric.
typedef struct FblmnnMetric FblmnnMetric;

// Solver settings; obtain defaults from [`fblmnn_solver_config_default`].
typedef struct FblmnnSolverConfig {
  enum FblmnnMode mode;
  double mu;
  size_t k;
  size_t passes;
  size_t max_iterations;
  double tolerance;
  double r_cap;
  size_t workers;
  // Nonzero to measure feasibility on the input coordinates in every pass.
  bool freeze_weights;
} FblmnnSolverConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *fblmnn_version(void);

// Message describing the last failure on this thread, or NULL after a
// success. The pointer stays valid until the next call into the library
// from the same thread.
const char *fblmnn_last_error_message(void);

// Builds a dataset from `n × dim` row-major `points` and `n` labels in
// `0..C`, where every class in that range occurs.
//
// # Safety
// `points` must hold `n * dim` values and `labels` `n` values; `out` must be writable.
enum FblmnnStatus fblmnn_dataset_new(const double *points,
                                     size_t n,
                                     size_t dim,
                                     const uint32_t *labels,
                                     struct FblmnnDataset **out);

// Loads a CSV file. `label_col` is a 0-based index or a header name.
//
// # Safety
// `path` and `label_col` must be NUL-terminated strings; `out` must be writable.
enum FblmnnStatus fblmnn_dataset_load_csv(const char *path,
                                          const char *label_col,
                                          bool has_header,
                                          struct FblmnnDataset **out);

// Releases a dataset; NULL is ignored.
//
// # Safety
// `ds` must come from this library and not be used afterwards.
void fblmnn_dataset_free(struct FblmnnDataset *ds);

// Number of points, or 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live dataset handle.
size_t fblmnn_dataset_len(const struct FblmnnDataset *ds);

// Feature dimension, or 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live dataset handle.
size_t fblmnn_dataset_dim(const struct FblmnnDataset *ds);

// Number of classes, or 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live dataset handle.
size_t fblmnn_dataset_class_count(const struct FblmnnDataset *ds);

// Default solver settings for `mode`.
struct FblmnnSolverConfig fblmnn_solver_config_default(enum FblmnnMode mode);

// Learns a metric. `final_objective` may be NULL.
//
// # Safety
// `ds` and `cfg` must be valid pointers; `out` must be writable.
enum FblmnnStatus fblmnn_fit(const struct FblmnnDataset *ds,
                             const struct FblmnnSolverConfig *cfg,
                             struct FblmnnMetric **out,
                             double *final_objective);

// Builds a metric from `dim × dim` row-major entries; the matrix must be
// symmetric and positive semidefinite.
//
// # Safety
// `entries` must hold `dim * dim` values; `out` must be writable.
enum FblmnnStatus fblmnn_metric_new(const double *entries, size_t dim, struct FblmnnMetric **out);

// Identity metric of dimension `dim`, or NULL when `dim` is 0.
struct FblmnnMetric *fblmnn_metric_identity(size_t dim);

// Reads a metric text file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum FblmnnStatus fblmnn_metric_read(const char *path, struct FblmnnMetric **out);

// Writes a metric text file.
//
// # Safety
// `metric` must be a live handle and `path` a NUL-terminated string.
enum FblmnnStatus fblmnn_metric_write(const struct FblmnnMetric *metric, const char *path);

// Releases a metric; NULL is ignored.
//
// # Safety
// `metric` must come from this library and not be used afterwards.
void fblmnn_metric_free(struct FblmnnMetric *metric);

// Matrix dimension, or 0 for NULL.
//
// # Safety
// `metric` must be NULL or a live handle.
size_t fblmnn_metric_dim(const struct FblmnnMetric *metric);

// Copies the `dim × dim` row-major entries into `out`, which holds `len` values.
//
// # Safety
// `metric` must be a live handle and `out` writable for `len` values.
enum FblmnnStatus fblmnn_metric_entries(const struct FblmnnMetric *metric, double *out, size_t len);

// Squared Mahalanobis distance between two `dim`-vectors.
//
// # Safety
// `metric` must be a live handle; `x` and `y` hold `dim` values; `out` writable.
enum FblmnnStatus fblmnn_mahalanobis(const struct FblmnnMetric *metric,
                                     const double *x,
                                     const double *y,
                                     size_t dim,
                                     double *out);

// Label predicted for `query` by `k`-nearest-neighbor vote under `metric`.
//
// # Safety
// Handles must be live; `query` holds `dim` values; `out` writable.
enum FblmnnStatus fblmnn_knn_predict(const struct FblmnnDataset *train,
                                     const struct FblmnnMetric *metric,
                                     const double *query,
                                     size_t dim,
                                     size_t k,
                                     uint32_t *out);

// Feasibility measure of the triplet `(x_i, x_j, x_l)`. A non-positive
// `r_cap` selects the default cap.
//
// # Safety
// The three points hold `dim` values each; `out` writable.
enum FblmnnStatus fblmnn_triplet_feasibility(const double *x_i,
                                             const double *x_j,
                                             const double *x_l,
                                             size_t dim,
                                             double r_cap,
                                             double *out);

// Stratified cross-validated kNN accuracy. `cfg` may be NULL for the
// method's defaults; its mode is replaced by the one `method` implies.
// `stddev` may be NULL.
//
// # Safety
// `ds` must be a live handle; `mean` writable.
enum FblmnnStatus fblmnn_cross_validate(const struct FblmnnDataset *ds,
                                        enum FblmnnMethod method,
                                        const struct FblmnnSolverConfig *cfg,
                                        size_t folds,
                                        uint64_t seed,
                                        bool standardize,
                                        double *mean,
                                        double *stddev);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FBLMNN_H */
