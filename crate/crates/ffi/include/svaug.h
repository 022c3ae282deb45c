#ifndef SVAUG_H
#define SVAUG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SvaugStatus {
  SVAUG_STATUS_OK = 0,
  SVAUG_STATUS_NULL_POINTER = 1,
  SVAUG_STATUS_INVALID_UTF8 = 2,
  // Bad input or configuration, unreadable file, parse failure.
  SVAUG_STATUS_INPUT_ERROR = 3,
  // Nothing left to work with, e.g. a corpus with no valid records.
  SVAUG_STATUS_EMPTY_DATA = 4,
  // A degenerate request such as deleting the only word of a text.
  SVAUG_STATUS_DEGENERATE = 5,
  SVAUG_STATUS_INTERNAL = 6,
  SVAUG_STATUS_PANIC = 7,
} SvaugStatus;

// Outcome kind of [`svaug_wilcoxon`].
typedef enum SvaugWilcoxonKind {
  SVAUG_WILCOXON_KIND_TESTED = 0,
  SVAUG_WILCOXON_KIND_NO_DIFFERENCE = 1,
  SVAUG_WILCOXON_KIND_TOO_FEW_PAIRS = 2,
} SvaugWilcoxonKind;

// Opaque classifier handle: TF-IDF features plus a random forest.
typedef struct SvaugClassifier SvaugClassifier;

// Opaque corpus handle.
typedef struct SvaugCorpus SvaugCorpus;

typedef struct SvaugWilcoxon {
  enum SvaugWilcoxonKind kind;
  // Pairs with a nonzero difference.
  size_t n;
  double z;
  double p_value;
  double r;
  // 0 negligible, 1 small, 2 medium, 3 large.
  uint32_t magnitude;
  // `p_value` below 0.01.
  bool significant;
} SvaugWilcoxon;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Owned by the library.
const char *svaug_last_error(void);

// Loads a corpus in the native CSV format.
//
// # Safety
// `path` must be a nul-terminated string and `out` a valid pointer.
enum SvaugStatus svaug_corpus_load_csv(const char *path, struct SvaugCorpus **out);

// Loads and validates one NVD JSON 1.1 feed.
//
// # Safety
// `path` must be a nul-terminated string and `out` a valid pointer.
enum SvaugStatus svaug_corpus_load_nvd_json(const char *path, struct SvaugCorpus **out);

// Number of records; 0 for a null handle.
//
// # Safety
// `corpus` must be null or a live handle.
size_t svaug_corpus_len(const struct SvaugCorpus *corpus);

// Class counts of metric `metric` (0 access vector .. 6 severity), in class order.
//
// # Safety
// `corpus` must be a live handle and `out` point to three writable `size_t`.
enum SvaugStatus svaug_corpus_class_counts(const struct SvaugCorpus *corpus,
                                           uint32_t metric,
                                           size_t *out);

// # Safety
// `corpus` must be null or a handle not yet freed.
void svaug_corpus_free(struct SvaugCorpus *corpus);

// One synthetic variant of `text` made with `technique` (for example
// "insertion" or "combination"). The frequent-word pool comes from `pool`,
// or from the bundled mini corpus when `pool` is null.
//
// # Safety
// Strings must be nul-terminated, `pool` null or live, `out` valid.
enum SvaugStatus svaug_augment_text(const struct SvaugCorpus *pool,
                                    const char *text,
                                    const char *technique,
                                    uint64_t seed,
                                    char **out);

// Preprocessed tokens of `text` joined by single spaces.
//
// # Safety
// `text` must be nul-terminated and `out` valid.
enum SvaugStatus svaug_preprocess(const char *text, char **out);

// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void svaug_string_free(char *s);

// Multiclass MCC of a row-major 3x3 confusion matrix (rows are truth).
//
// # Safety
// `counts` must point to nine `uint64_t`, `out` to a writable double.
enum SvaugStatus svaug_multiclass_mcc(const uint64_t *counts, double *out);

// Macro F1 of a row-major 3x3 confusion matrix.
//
// # Safety
// As for [`svaug_multiclass_mcc`].
enum SvaugStatus svaug_macro_f1(const uint64_t *counts, double *out);

// Wilcoxon signed-rank test of paired samples `a` and `b` of length `n`.
//
// # Safety
// `a` and `b` must point to `n` doubles, `out` to a writable result.
enum SvaugStatus svaug_wilcoxon(const double *a,
                                const double *b,
                                size_t n,
                                struct SvaugWilcoxon *out);

// Trains a TF-IDF random forest on `n` descriptions with class labels 0..3.
//
// # Safety
// `texts` must point to `n` nul-terminated strings, `labels` to `n` bytes,
// `out` must be valid.
enum SvaugStatus svaug_classifier_train(const char *const *texts,
                                        const uint8_t *labels,
                                        size_t n,
                                        uint32_t n_trees,
                                        uint32_t max_depth,
                                        uint32_t max_leaf_nodes,
                                        uint64_t seed,
                                        struct SvaugClassifier **out);

// Predicted class of `text`.
//
// # Safety
// `classifier` must be live, `text` nul-terminated, `out` valid.
enum SvaugStatus svaug_classifier_predict(const struct SvaugClassifier *classifier,
                                          const char *text,
                                          uint32_t *out);

// Writes the classifier as JSON.
//
// # Safety
// `classifier` must be live and `path` nul-terminated.
enum SvaugStatus svaug_classifier_save(const struct SvaugClassifier *classifier, const char *path);

// Reads a classifier written by [`svaug_classifier_save`].
//
// # Safety
// `path` must be nul-terminated and `out` valid.
enum SvaugStatus svaug_classifier_load(const char *path, struct SvaugClassifier **out);

// # Safety
// `classifier` must be null or a handle not yet freed.
void svaug_classifier_free(struct SvaugClassifier *classifier);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SVAUG_H */
