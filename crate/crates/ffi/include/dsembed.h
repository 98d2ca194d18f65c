#ifndef DSEMBED_H
#define DSEMBED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Values 2 to 5 match the command line tool's exit codes.
 */
typedef enum DseStatus {
  DSE_STATUS_OK = 0,
  /**
   * Invalid parameter value.
   */
  DSE_STATUS_CONFIG = 2,
  /**
   * Malformed or unreadable input, including I/O failures.
   */
  DSE_STATUS_INPUT = 3,
  /**
   * Numerical breakdown during training.
   */
  DSE_STATUS_COLLAPSE = 4,
  /**
   * Query word unknown or without an embedding.
   */
  DSE_STATUS_LOOKUP = 5,
  /**
   * A required pointer argument was null.
   */
  DSE_STATUS_NULL_ARGUMENT = 10,
  /**
   * A caller-provided buffer is shorter than required.
   */
  DSE_STATUS_BUFFER_TOO_SMALL = 11,
  /**
   * An internal panic was caught at the boundary.
   */
  DSE_STATUS_INTERNAL = 12,
} DseStatus;

/**
 * Vocabulary and similarity matrix built from a corpus.
 */
typedef struct DseCorpus DseCorpus;

/**
 * Trained embedding with its vocabulary.
 */
typedef struct DseModel DseModel;

/**
 * Solver parameters. Obtain defaults from [`dse_train_options_default`].
 */
typedef struct DseTrainOptions {
  size_t rank;
  size_t max_iters;
  double conv_tol;
  double simplex_tol;
  uint64_t seed;
  size_t threads;
} DseTrainOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null.
 */
const char *dse_last_error(void);

struct DseTrainOptions dse_train_options_default(void);

/**
 * Build from an in-memory nul-terminated text.
 *
 * # Safety
 * `text` must be a valid nul-terminated string and `out` a valid pointer.
 */
enum DseStatus dse_corpus_from_text(const char *text,
                                    size_t max_vocab,
                                    size_t window,
                                    bool lowercase,
                                    struct DseCorpus **out);

/**
 * Build from a UTF-8 corpus file.
 *
 * # Safety
 * `path` must be a valid nul-terminated string and `out` a valid pointer.
 */
enum DseStatus dse_corpus_from_file(const char *path,
                                    size_t max_vocab,
                                    size_t window,
                                    bool lowercase,
                                    struct DseCorpus **out);

/**
 * Number of words kept for training, or 0 for a null handle.
 *
 * # Safety
 * `corpus` must be null or a live handle.
 */
size_t dse_corpus_size(const struct DseCorpus *corpus);

/**
 * Distinct unordered word pairs with nonzero similarity.
 *
 * # Safety
 * `corpus` must be null or a live handle.
 */
size_t dse_corpus_pairs(const struct DseCorpus *corpus);

/**
 * Write `vocab.tsv`, `pruned.tsv` and `similarity.txt` into `dir`.
 *
 * # Safety
 * `corpus` must be a live handle and `dir` a valid string.
 */
enum DseStatus dse_corpus_save(const struct DseCorpus *corpus, const char *dir);

/**
 * # Safety
 * `corpus` must be null or a handle not yet freed.
 */
void dse_corpus_free(struct DseCorpus *corpus);

/**
 * Train an embedding. `options` may be null for defaults; `iterations`
 * may be null.
 *
 * # Safety
 * `corpus` must be a live handle; pointer arguments must be valid or null
 * where allowed.
 */
enum DseStatus dse_train(const struct DseCorpus *corpus,
                         const struct DseTrainOptions *options,
                         struct DseModel **out,
                         size_t *iterations);

/**
 * Load `model.txt`, `vocab.tsv` and, if present, `pruned.tsv` from `dir`.
 *
 * # Safety
 * `dir` must be a valid string and `out` a valid pointer.
 */
enum DseStatus dse_model_load(const char *dir, struct DseModel **out);

/**
 * Write `model.txt`, `vocab.tsv` and `pruned.tsv` into `dir`.
 *
 * # Safety
 * `model` must be a live handle and `dir` a valid string.
 */
enum DseStatus dse_model_save(const struct DseModel *model, const char *dir);

/**
 * # Safety
 * `model` must be null or a live handle.
 */
size_t dse_model_size(const struct DseModel *model);

/**
 * # Safety
 * `model` must be null or a live handle.
 */
size_t dse_model_rank(const struct DseModel *model);

/**
 * Word with the given id, or null when out of range. Owned by the handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
const char *dse_model_word(const struct DseModel *model, size_t id);

/**
 * Id of `word`; fails with `Lookup` for unknown or pruned words.
 *
 * # Safety
 * `model` must be a live handle, `word` a valid string, `id` a valid pointer.
 */
enum DseStatus dse_model_word_id(const struct DseModel *model, const char *word, size_t *id);

/**
 * Copy the `rank` topic weights of word `id` into `out`.
 *
 * # Safety
 * `model` must be a live handle and `out` must hold `len` doubles.
 */
enum DseStatus dse_model_row(const struct DseModel *model, size_t id, double *out, size_t len);

/**
 * Copy the learned similarity of word `id` to every word (length = size).
 *
 * # Safety
 * `model` must be a live handle and `out` must hold `len` doubles.
 */
enum DseStatus dse_model_similarity_row(const struct DseModel *model,
                                        size_t id,
                                        double *out,
                                        size_t len);

/**
 * Up to `k` nearest neighbors of `word`, most similar first. Writes ids and
 * scores into arrays of length `k` and the number filled into `count`.
 *
 * # Safety
 * `model` must be a live handle; `ids` and `scores` must hold `k` elements.
 */
enum DseStatus dse_model_knn(const struct DseModel *model,
                             const char *word,
                             size_t k,
                             size_t *ids,
                             double *scores,
                             size_t *count);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void dse_model_free(struct DseModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DSEMBED_H */
