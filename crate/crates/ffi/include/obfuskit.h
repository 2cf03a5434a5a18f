#ifndef OBFUSKIT_H
#define OBFUSKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum ObfStatus {
  OBF_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  OBF_STATUS_NULL = 1,
  /**
   * Invalid parameter, config or input file contents.
   */
  OBF_STATUS_INVALID = 2,
  /**
   * File could not be read or written.
   */
  OBF_STATUS_IO = 3,
  /**
   * Any other failure inside the library.
   */
  OBF_STATUS_RUNTIME = 4,
  /**
   * The library panicked; the handle arguments are still valid.
   */
  OBF_STATUS_PANIC = 5,
} ObfStatus;

/**
 * Opaque dataset handle.
 */
typedef struct ObfDataset ObfDataset;

/**
 * Opaque model handle.
 */
typedef struct ObfModel ObfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *obf_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *obf_version(void);

/**
 * Release a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void obf_string_free(char *s);

/**
 * Load a CSV dataset.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum ObfStatus obf_dataset_load_csv(const char *path, struct ObfDataset **out);

/**
 * Write a dataset as CSV.
 *
 * # Safety
 * `dataset` must be a live handle; `path` must be NUL-terminated.
 */
enum ObfStatus obf_dataset_save_csv(const struct ObfDataset *dataset, const char *path);

/**
 * Number of samples; 0 for NULL.
 *
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
size_t obf_dataset_len(const struct ObfDataset *dataset);

/**
 * Feature dimension; 0 for NULL.
 *
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
size_t obf_dataset_dim(const struct ObfDataset *dataset);

/**
 * Number of classes; 0 for NULL.
 *
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
size_t obf_dataset_num_classes(const struct ObfDataset *dataset);

/**
 * Copy sample `index` into `features` (length `dim`) and its label into
 * `label`.
 *
 * # Safety
 * `dataset` must be a live handle; `features` must hold `dim` doubles;
 * `label` must be writable.
 */
enum ObfStatus obf_dataset_sample(const struct ObfDataset *dataset,
                                  size_t index,
                                  double *features,
                                  size_t dim,
                                  size_t *label);

/**
 * Release a dataset handle. NULL is ignored.
 *
 * # Safety
 * `dataset` must come from this library and not have been freed already.
 */
void obf_dataset_free(struct ObfDataset *dataset);

/**
 * Individual-sample obfuscation of a random `selection_ratio` of the
 * samples (all of them at 1), noising `coord_ratio` of each selected
 * sample's coordinates with N(0, sigma).
 *
 * # Safety
 * `dataset` must be a live handle; `out` must be writable.
 */
enum ObfStatus obf_obfuscate_individual(const struct ObfDataset *dataset,
                                        double selection_ratio,
                                        double coord_ratio,
                                        double sigma,
                                        uint64_t seed,
                                        struct ObfDataset **out);

/**
 * Group obfuscation: append `aug_ratio` times the group size of noised
 * negatives. `label < 0` selects the whole dataset, otherwise the samples
 * of that class.
 *
 * # Safety
 * `dataset` must be a live handle; `out` must be writable.
 */
enum ObfStatus obf_obfuscate_group(const struct ObfDataset *dataset,
                                   int64_t label,
                                   double aug_ratio,
                                   double sigma,
                                   uint64_t seed,
                                   struct ObfDataset **out);

/**
 * Train a model on `dataset`. `spec_json` holds `model`, `train` and an
 * optional `seed`, e.g.
 * `{"model":{"architecture":"softmax"},"train":{"epochs":20,"batch_size":16,"learning_rate":0.1}}`.
 *
 * # Safety
 * `dataset` must be a live handle; `spec_json` NUL-terminated; `out`
 * writable.
 */
enum ObfStatus obf_model_train(const struct ObfDataset *dataset,
                               const char *spec_json,
                               struct ObfModel **out);

/**
 * Load a model from JSON.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` writable.
 */
enum ObfStatus obf_model_load(const char *path, struct ObfModel **out);

/**
 * Save a model as JSON.
 *
 * # Safety
 * `model` must be a live handle; `path` NUL-terminated.
 */
enum ObfStatus obf_model_save(const struct ObfModel *model, const char *path);

/**
 * Release a model handle. NULL is ignored.
 *
 * # Safety
 * `model` must come from this library and not have been freed already.
 */
void obf_model_free(struct ObfModel *model);

/**
 * Total number of parameters; 0 for NULL.
 *
 * # Safety
 * `model` must be NULL or a live handle.
 */
size_t obf_model_parameter_count(const struct ObfModel *model);

/**
 * Copy the flattened parameters into `out` (exactly `len` doubles).
 *
 * # Safety
 * `model` must be a live handle; `out` must hold `len` doubles.
 */
enum ObfStatus obf_model_get_parameters(const struct ObfModel *model, double *out, size_t len);

/**
 * Class probabilities for one sample; `out` holds `num_classes` doubles.
 *
 * # Safety
 * `model` must be a live handle; `features` must hold `dim` doubles and
 * `out` `num_classes` doubles.
 */
enum ObfStatus obf_model_predict_proba(const struct ObfModel *model,
                                       const double *features,
                                       size_t dim,
                                       double *out,
                                       size_t num_classes);

/**
 * Most probable class for one sample.
 *
 * # Safety
 * `model` must be a live handle; `features` must hold `dim` doubles;
 * `class_out` writable.
 */
enum ObfStatus obf_model_predict(const struct ObfModel *model,
                                 const double *features,
                                 size_t dim,
                                 size_t *class_out);

/**
 * Fraction of `dataset` the model classifies correctly.
 *
 * # Safety
 * Both handles must be live; `out` writable.
 */
enum ObfStatus obf_model_accuracy(const struct ObfModel *model,
                                  const struct ObfDataset *dataset,
                                  double *out);

/**
 * Write `n_bits` payload bits (one byte per bit, nonzero = 1) into the
 * `k_bits` low mantissa bits of the parameters, returning a new model.
 *
 * # Safety
 * `model` must be a live handle; `bits` must hold `n_bits` bytes; `out`
 * writable.
 */
enum ObfStatus obf_lsb_encode(const struct ObfModel *model,
                              const uint8_t *bits,
                              size_t n_bits,
                              uint32_t k_bits,
                              struct ObfModel **out);

/**
 * Read `n_bits` bits back from the `k_bits` low mantissa bits; each byte of
 * `out_bits` becomes 0 or 1.
 *
 * # Safety
 * `model` must be a live handle; `out_bits` must hold `n_bits` bytes.
 */
enum ObfStatus obf_lsb_decode(const struct ObfModel *model,
                              size_t n_bits,
                              uint32_t k_bits,
                              uint8_t *out_bits);

/**
 * Signs of the first `n_bits` parameters as bits (zero counts as 1).
 *
 * # Safety
 * `model` must be a live handle; `out_bits` must hold `n_bits` bytes.
 */
enum ObfStatus obf_sign_decode(const struct ObfModel *model, size_t n_bits, uint8_t *out_bits);

/**
 * F1 score of a binary confusion matrix.
 *
 * # Safety
 * `out` must be writable.
 */
enum ObfStatus obf_f1(uint64_t tp, uint64_t fn_, uint64_t fp, uint64_t tn, double *out);

/**
 * Run an experiment from its JSON config on `threads` workers (0 =
 * automatic). When `out_dir` is non-NULL the report, curves and artifacts
 * are written there. The report JSON is returned in `report_out` and must be
 * released with [`obf_string_free`].
 *
 * # Safety
 * `config_json` must be NUL-terminated; `out_dir` NULL or NUL-terminated;
 * `report_out` writable.
 */
enum ObfStatus obf_run_experiment(const char *config_json,
                                  const char *out_dir,
                                  size_t threads,
                                  char **report_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OBFUSKIT_H */
