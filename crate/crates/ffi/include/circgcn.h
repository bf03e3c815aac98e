#ifndef CIRCGCN_H
#define CIRCGCN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

typedef enum CgFusion {
  CG_FUSION_AVERAGE = 0,
  CG_FUSION_SEQUENCE_PREFERRED = 1,
  CG_FUSION_GIP_ONLY = 2,
} CgFusion;

typedef enum CgStatus {
  CG_STATUS_OK = 0,
  CG_STATUS_USAGE = 1,
  CG_STATUS_DATA = 2,
  CG_STATUS_NUMERIC = 3,
  CG_STATUS_IO = 4,
  CG_STATUS_NULL_ARGUMENT = 5,
  CG_STATUS_BUFFER_SIZE = 6,
  CG_STATUS_PANIC = 7,
} CgStatus;

/**
 * Labels plus optional sequence similarity.
 */
typedef struct CgDataset CgDataset;

/**
 * Pipeline settings. Obtain defaults from `cg_config_default`.
 */
typedef struct CgConfig {
  size_t k;
  double threshold;
  /**
   * Keep only this many most-associated diseases; 0 keeps all.
   */
  size_t n_diseases;
  /**
   * Compute GIP kernels from the full matrix instead of training rows.
   */
  bool gip_full;
  double alpha_hat_c;
  double alpha_hat_d;
  enum CgFusion fusion;
  double gamma;
  bool include_disease_edges;
  bool include_assoc_edges;
  size_t hidden_dim;
  double learning_rate;
  size_t epochs;
  uint64_t seed;
  bool self_loops;
  bool row_norm;
  double adam_beta1;
  double adam_beta2;
  double adam_eps;
  double positive_weight;
  size_t jobs;
} CgConfig;

typedef struct CgSynthSpec {
  size_t n_circ;
  size_t n_disease;
  size_t n_blocks;
  double intra_block_assoc_prob;
  double noise_prob;
  size_t seq_len;
  double mutation_rate;
  uint64_t seed;
} CgSynthSpec;

typedef struct CgMetrics {
  double accuracy;
  double precision;
  double recall;
  double f1;
  /**
   * NaN when `auc_defined` is false.
   */
  double auc;
  bool auc_defined;
} CgMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

struct CgConfig cg_config_default(void);

struct CgSynthSpec cg_synth_spec_default(void);

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *cg_last_error(void);

/**
 * Loads an association CSV and an optional FASTA (`fasta_path` may be NULL)
 * using the default alignment scoring.
 *
 * # Safety
 * Paths must be NUL-terminated strings; `out` must be writable.
 */
enum CgStatus cg_dataset_load(const char *assoc_path,
                              const char *fasta_path,
                              struct CgDataset **out);

/**
 * # Safety
 * `spec` must point to a valid struct; `out` must be writable.
 */
enum CgStatus cg_dataset_synth(const struct CgSynthSpec *spec, struct CgDataset **out);

/**
 * # Safety
 * `ds` must come from this library and not be used afterwards. NULL is ignored.
 */
void cg_dataset_free(struct CgDataset *ds);

/**
 * # Safety
 * `ds` must be a live handle or NULL (returns 0).
 */
size_t cg_dataset_n_circ(const struct CgDataset *ds);

/**
 * # Safety
 * `ds` must be a live handle or NULL (returns 0).
 */
size_t cg_dataset_n_disease(const struct CgDataset *ds);

/**
 * k-fold cross-validation. Writes fold-averaged metrics to `average` and
 * their population standard deviation to `stddev` (may be NULL).
 *
 * # Safety
 * Pointers must be valid; `stddev` may be NULL.
 */
enum CgStatus cg_cross_validate(const struct CgDataset *ds,
                                const struct CgConfig *cfg,
                                struct CgMetrics *average,
                                struct CgMetrics *stddev);

/**
 * Trains on every circRNA and writes `n_circ * n_disease` scores row-major.
 * With a disease selection the shape is that of the selected dataset;
 * `written` receives the number of values.
 *
 * # Safety
 * `scores` must hold `capacity` doubles.
 */
enum CgStatus cg_predict(const struct CgDataset *ds,
                         const struct CgConfig *cfg,
                         double *scores,
                         size_t capacity,
                         size_t *written);

/**
 * Global alignment score with linear gaps.
 *
 * # Safety
 * `a` and `b` must hold `a_len` and `b_len` bytes (may be NULL when empty).
 */
int64_t cg_nw_score(const uint8_t *a,
                    size_t a_len,
                    const uint8_t *b,
                    size_t b_len,
                    int64_t match_score,
                    int64_t mismatch,
                    int64_t gap);

/**
 * Rank-based ROC AUC; labels are 0 or 1.
 *
 * # Safety
 * `scores` and `labels` must hold `n` elements; `out` must be writable.
 */
enum CgStatus cg_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cg_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CIRCGCN_H */
