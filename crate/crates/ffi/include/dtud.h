#ifndef DTUD_H
#define DTUD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DtudStatus {
  DTUD_STATUS_OK = 0,
  DTUD_STATUS_NULL_POINTER = 1,
  DTUD_STATUS_INVALID_STRING = 2,
  DTUD_STATUS_IO = 10,
  DTUD_STATUS_INGESTION = 11,
  DTUD_STATUS_FORMAT = 12,
  DTUD_STATUS_CONSTRUCTION = 20,
  DTUD_STATUS_SCHEMA = 21,
  DTUD_STATUS_SELECTION = 30,
  DTUD_STATUS_INVALID_PARAMETER = 40,
  DTUD_STATUS_CONDITIONING = 41,
  DTUD_STATUS_PANIC = 99,
} DtudStatus;

/*
 Training data loaded from CSV.
 */
typedef struct DtudDataset DtudDataset;

/*
 A fitted thin-plate-spline morphing map.
 */
typedef struct DtudMorphMap DtudMorphMap;

/*
 A trained or deserialised tree.
 */
typedef struct DtudTree DtudTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty after a success.
 The pointer stays valid until the next call on the same thread.
 */
const char *dtud_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *dtud_version(void);

/*
 # Safety
 `s` must come from this library or be null.
 */
void dtud_string_free(char *s);

/*
 Loads a labeled CSV (attribute columns, label last) with relative
 deviation `uncertainty` on every attribute.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum DtudStatus dtud_dataset_load(const char *path, double uncertainty, struct DtudDataset **out);

/*
 Number of tuples, or 0 for a null handle.

 # Safety
 `ds` must be a live handle or null.
 */
size_t dtud_dataset_len(const struct DtudDataset *ds);

/*
 # Safety
 `ds` must be a handle from this library or null; it is invalid afterwards.
 */
void dtud_dataset_free(struct DtudDataset *ds);

/*
 Trains a tree. `n_split_points` candidate thresholds are tried per
 attribute at every node; paths hold at most `max_layers` splits.

 # Safety
 `ds` must be a live handle; `out` must be writable.
 */
enum DtudStatus dtud_tree_build(const struct DtudDataset *ds,
                                size_t max_layers,
                                size_t n_split_points,
                                struct DtudTree **out);

/*
 # Safety
 `json` must be a NUL-terminated string; `out` must be writable.
 */
enum DtudStatus dtud_tree_from_json(const char *json, struct DtudTree **out);

/*
 Serialises the tree; release the string with [`dtud_string_free`].

 # Safety
 `tree` must be a live handle; `out` must be writable.
 */
enum DtudStatus dtud_tree_to_json(const struct DtudTree *tree, char **out);

/*
 # Safety
 `tree` must be a live handle or null.
 */
size_t dtud_tree_n_attributes(const struct DtudTree *tree);

/*
 # Safety
 `tree` must be a live handle or null.
 */
size_t dtud_tree_n_labels(const struct DtudTree *tree);

/*
 Name of label `index` (labels are sorted), or null when out of range.
 The pointer is owned by the caller; free it with [`dtud_string_free`].

 # Safety
 `tree` must be a live handle or null.
 */
char *dtud_tree_label(const struct DtudTree *tree, size_t index);

/*
 Label probabilities of a design whose attributes have nominal values
 `means` and relative deviation `uncertainty`. Writes `n_labels` values.

 # Safety
 `means` must hold `n_attributes` values and `lp_out` room for
 `n_labels` values.
 */
enum DtudStatus dtud_tree_classify(const struct DtudTree *tree,
                                   const double *means,
                                   size_t n_attributes,
                                   double uncertainty,
                                   double *lp_out,
                                   size_t n_labels);

/*
 # Safety
 `tree` must be a handle from this library or null; it is invalid afterwards.
 */
void dtud_tree_free(struct DtudTree *tree);

/*
 Fits a morphing map to `n` control points given as row-major `n×3`
 arrays. `regularization` is added to the kernel diagonal (0 interpolates).

 # Safety
 `original` and `displaced` must hold `3n` values; `out` must be writable.
 */
enum DtudStatus dtud_morph_fit(const double *original,
                               const double *displaced,
                               size_t n,
                               double regularization,
                               struct DtudMorphMap **out);

/*
 Morphs `m` nodes (row-major `m×3`) into `out` (same shape). `nodes` and
 `out` may alias.

 # Safety
 `nodes` and `out` must hold `3m` values.
 */
enum DtudStatus dtud_morph_apply(const struct DtudMorphMap *map,
                                 const double *nodes,
                                 size_t m,
                                 double *out);

/*
 Estimated condition number of the fitted system, NaN for null.

 # Safety
 `map` must be a live handle or null.
 */
double dtud_morph_condition(const struct DtudMorphMap *map);

/*
 # Safety
 `map` must be a handle from this library or null; it is invalid afterwards.
 */
void dtud_morph_free(struct DtudMorphMap *map);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DTUD_H */
