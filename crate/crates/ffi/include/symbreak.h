#ifndef SYMBREAK_H
#define SYMBREAK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes shared by every entry point.
 */
typedef enum SbStatus {
  SB_STATUS_OK = 0,
  SB_STATUS_NULL_POINTER = 1,
  SB_STATUS_CONTRACT = 2,
  SB_STATUS_ALLOCATION = 3,
  SB_STATUS_BAD_MAGIC = 4,
  SB_STATUS_VERSION_MISMATCH = 5,
  SB_STATUS_TRUNCATED = 6,
  SB_STATUS_NON_FINITE = 7,
  SB_STATUS_MALFORMED = 8,
  SB_STATUS_DIVERGENCE = 9,
  SB_STATUS_IO = 10,
  SB_STATUS_USAGE = 11,
  SB_STATUS_INVALID_ARGUMENT = 12,
  SB_STATUS_BUFFER_TOO_SMALL = 13,
  SB_STATUS_PANIC = 14,
} SbStatus;

typedef enum SbField {
  SB_FIELD_REAL = 0,
  SB_FIELD_COMPLEX = 1,
} SbField;

/*
 Symmetry element returned by [`sb_canonicalize`].
 */
typedef enum SbTransform {
  SB_TRANSFORM_IDENTITY = 0,
  SB_TRANSFORM_SIGN_FLIP = 1,
  SB_TRANSFORM_PHASE = 2,
} SbTransform;

typedef enum SbArchitecture {
  SB_ARCHITECTURE_NN = 0,
  SB_ARCHITECTURE_WNN = 1,
  SB_ARCHITECTURE_DNN = 2,
} SbArchitecture;

typedef enum SbRegularization {
  SB_REGULARIZATION_NONE = 0,
  SB_REGULARIZATION_L1 = 1,
  SB_REGULARIZATION_L2 = 2,
  SB_REGULARIZATION_L1L2 = 3,
} SbRegularization;

/*
 Opaque dataset handle.
 */
typedef struct SbDataset SbDataset;

/*
 Opaque trained-network handle.
 */
typedef struct SbModel SbModel;

/*
 Training options; start from [`sb_train_options_default`].
 */
typedef struct SbTrainOptions {
  enum SbArchitecture architecture;
  /*
   Nonzero: canonicalize training and validation targets first.
   */
  uint8_t break_symmetry;
  uintptr_t max_epochs;
  double learning_rate;
  uintptr_t patience;
  uintptr_t batch_size;
  enum SbRegularization regularization;
  double reg_lambda;
  uint8_t standardize_inputs;
  uint64_t seed;
} SbTrainOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or NULL after a
 success. The pointer stays valid until the next call on this thread.
 */
const char *sb_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *sb_version(void);

/*
 Draws `count` samples of a fresh problem with `m` measurements of an
 `n`-dimensional signal.

 # Safety
 `out` must be a valid pointer to writable storage for one handle.
 */
enum SbStatus sb_dataset_generate(enum SbField field,
                                  uintptr_t n,
                                  uintptr_t m,
                                  uintptr_t count,
                                  uint64_t seed,
                                  struct SbDataset **out);

/*
 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SbStatus sb_dataset_load(const char *path, struct SbDataset **out);

/*
 # Safety
 `dataset` must be a live handle; `path` a NUL-terminated string.
 */
enum SbStatus sb_dataset_save(const struct SbDataset *dataset, const char *path);

/*
 # Safety
 `dataset` must be NULL or a handle not yet freed.
 */
void sb_dataset_free(struct SbDataset *dataset);

/*
 Shape and flags of a dataset. Any output pointer may be NULL.

 # Safety
 `dataset` must be a live handle; non-NULL outputs must be writable.
 */
enum SbStatus sb_dataset_info(const struct SbDataset *dataset,
                              enum SbField *field,
                              uintptr_t *n,
                              uintptr_t *m,
                              uintptr_t *count,
                              uint8_t *canonicalized);

/*
 Copies sample `index`: the real-encoded signal into `x` and the
 measurements into `y`.

 # Safety
 `x` and `y` must point to at least `x_len` and `y_len` writable doubles.
 */
enum SbStatus sb_dataset_sample(const struct SbDataset *dataset,
                                uintptr_t index,
                                double *x,
                                uintptr_t x_len,
                                double *y,
                                uintptr_t y_len);

/*
 New dataset with every signal mapped to its orbit representative.

 # Safety
 `dataset` must be a live handle; `out` must be writable.
 */
enum SbStatus sb_dataset_apply_symmetry_breaking(const struct SbDataset *dataset,
                                                 struct SbDataset **out);

/*
 `y = |Ax|^2` for an explicit row-major `m x n` matrix. `a_im` is
 ignored for real problems and required for complex ones.

 # Safety
 Matrix planes must hold `m * n` doubles, `x` the real encoding of an
 `n`-vector, and `y` at least `m` writable doubles.
 */
enum SbStatus sb_forward(enum SbField field,
                         const double *a_re,
                         const double *a_im,
                         uintptr_t m,
                         uintptr_t n,
                         const double *x,
                         double *y);

/*
 Maps `x` onto its orbit representative. `theta` receives the phase for
 complex input (0 for real); `was_boundary` is set when the deciding
 coordinate was zero. Optional outputs may be NULL.

 # Safety
 `x` and `x_canon` must each hold the real encoding of an `n`-vector.
 */
enum SbStatus sb_canonicalize(enum SbField field,
                              const double *x,
                              uintptr_t n,
                              double *x_canon,
                              enum SbTransform *transform,
                              double *theta,
                              uint8_t *was_boundary);

/*
 # Safety
 `x` must hold the real encoding of an `n`-vector; `out` must be writable.
 */
enum SbStatus sb_is_representative(enum SbField field, const double *x, uintptr_t n, uint8_t *out);

/*
 Symmetry-rectified squared error divided by `n`.

 # Safety
 `x_hat` and `x` must hold real encodings of `n`-vectors.
 */
enum SbStatus sb_rectified_error(enum SbField field,
                                 const double *x_hat,
                                 const double *x,
                                 uintptr_t n,
                                 double *out);

/*
 `Σ (d_in + 1) d_out` over consecutive entries of `dims`.

 # Safety
 `dims` must hold `len` values; `out` must be writable.
 */
enum SbStatus sb_count_parameters(const uintptr_t *dims, uintptr_t len, uintptr_t *out);

struct SbTrainOptions sb_train_options_default(void);

/*
 Splits `dataset` with `split_seed`, trains on the training part and
 returns the network with the best validation loss.

 # Safety
 `dataset` must be a live handle, `options` readable, `out` writable.
 */
enum SbStatus sb_train(const struct SbDataset *dataset,
                       uint64_t split_seed,
                       const struct SbTrainOptions *options,
                       struct SbModel **out);

/*
 Mean rectified error of `model` on the raw test part of `dataset`.

 # Safety
 Both handles must be live; `out` must be writable.
 */
enum SbStatus sb_evaluate(const struct SbModel *model,
                          const struct SbDataset *dataset,
                          uint64_t split_seed,
                          double *out);

/*
 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SbStatus sb_model_load(const char *path, struct SbModel **out);

/*
 # Safety
 `model` must be a live handle; `path` a NUL-terminated string.
 */
enum SbStatus sb_model_save(const struct SbModel *model, const char *path);

/*
 # Safety
 `model` must be NULL or a handle not yet freed.
 */
void sb_model_free(struct SbModel *model);

/*
 Copies the layer dimensions into `dims` (capacity `cap`) and stores
 their number in `len`. With `cap` too small only `len` is written and
 `BufferTooSmall` is returned.

 # Safety
 `model` must be live, `dims` must hold `cap` values, `len` writable.
 */
enum SbStatus sb_model_dims(const struct SbModel *model,
                            uintptr_t *dims,
                            uintptr_t cap,
                            uintptr_t *len);

/*
 Runs the network on one measurement vector.

 # Safety
 `y` must hold `y_len` doubles, `x_hat` `x_len` writable doubles.
 */
enum SbStatus sb_model_predict(const struct SbModel *model,
                               const double *y,
                               uintptr_t y_len,
                               double *x_hat,
                               uintptr_t x_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYMBREAK_H */
