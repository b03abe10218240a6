#ifndef TAAFS_H
#define TAAFS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TaafsStatus {
  TAAFS_STATUS_OK = 0,
  TAAFS_STATUS_NULL_POINTER = 1,
  TAAFS_STATUS_INVALID_ARGUMENT = 2,
  TAAFS_STATUS_IO = 3,
  TAAFS_STATUS_CHECKPOINT = 4,
  TAAFS_STATUS_DIMENSION = 5,
  TAAFS_STATUS_BUFFER_TOO_SMALL = 6,
  TAAFS_STATUS_PANIC = 7,
} TaafsStatus;

/**
 * A basis family evaluated on its domain.
 */
typedef struct TaafsBasis TaafsBasis;

/**
 * A trained model loaded from a checkpoint file.
 */
typedef struct TaafsModel TaafsModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *taafs_version(void);

/**
 * Message for the last failed call on this thread, or NULL after a
 * successful call. Valid until the next call into the library on this thread.
 */
const char *taafs_last_error(void);

/**
 * Loads a checkpoint written by `taafs train`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TaafsStatus taafs_model_load(const char *path, struct TaafsModel **out);

/**
 * Releases a model. NULL is ignored.
 *
 * # Safety
 * `model` must come from [`taafs_model_load`] and not be used afterwards.
 */
void taafs_model_free(struct TaafsModel *model);

/**
 * Number of raw input features the model expects.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum TaafsStatus taafs_model_input_dim(const struct TaafsModel *model, size_t *out);

/**
 * Total trainable parameters: weights, biases and activation coefficients.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum TaafsStatus taafs_model_param_count(const struct TaafsModel *model, size_t *out);

/**
 * Predicted energy, in dataset units, for one sample of raw features.
 *
 * # Safety
 * `features` must point to `n_features` doubles and `out` be a valid pointer.
 */
enum TaafsStatus taafs_model_predict(const struct TaafsModel *model,
                                     const double *features,
                                     size_t n_features,
                                     double *out);

/**
 * Forces `-dE/dx` with respect to each raw feature, written to `out`.
 *
 * # Safety
 * `features` must point to `n_features` doubles and `out` to `out_len`
 * writable doubles.
 */
enum TaafsStatus taafs_model_forces(const struct TaafsModel *model,
                                    const double *features,
                                    size_t n_features,
                                    double *out,
                                    size_t out_len);

/**
 * Creates a basis. `family` is a name such as `"bspline"` or `"chebyshev1"`.
 * A `degree` or `grid_count` of 0 keeps the family default.
 *
 * # Safety
 * `family` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TaafsStatus taafs_basis_new(const char *family,
                                 size_t degree,
                                 size_t grid_count,
                                 double domain_lo,
                                 double domain_hi,
                                 struct TaafsBasis **out);

/**
 * Releases a basis. NULL is ignored.
 *
 * # Safety
 * `basis` must come from [`taafs_basis_new`] and not be used afterwards.
 */
void taafs_basis_free(struct TaafsBasis *basis);

/**
 * Number of basis functions.
 *
 * # Safety
 * `basis` must be a live handle and `out` a valid pointer.
 */
enum TaafsStatus taafs_basis_len(const struct TaafsBasis *basis, size_t *out);

/**
 * Values of every basis function at `x`.
 *
 * # Safety
 * `out` must point to `out_len` writable doubles.
 */
enum TaafsStatus taafs_basis_eval(const struct TaafsBasis *basis,
                                  double x,
                                  double *out,
                                  size_t out_len);

/**
 * Derivatives of every basis function at `x`.
 *
 * # Safety
 * `out` must point to `out_len` writable doubles.
 */
enum TaafsStatus taafs_basis_derivative(const struct TaafsBasis *basis,
                                        double x,
                                        double *out,
                                        size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TAAFS_H */
