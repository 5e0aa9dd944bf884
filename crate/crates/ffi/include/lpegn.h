#ifndef LPEGN_H
#define LPEGN_H

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum LpegnStatus {
  LPEGN_STATUS_OK = 0,
  LPEGN_STATUS_NULL_POINTER = 1,
  LPEGN_STATUS_INVALID_ARGUMENT = 2,
  LPEGN_STATUS_SHAPE = 3,
  LPEGN_STATUS_IO = 4,
  LPEGN_STATUS_FORMAT = 5,
  LPEGN_STATUS_NUMERICAL = 6,
  LPEGN_STATUS_DEGENERATE = 7,
  LPEGN_STATUS_BUFFER_TOO_SMALL = 8,
  LPEGN_STATUS_PANIC = 9,
} LpegnStatus;

// Equivariant basis for a pair of orders at a fixed size.
typedef struct LpegnBasis LpegnBasis;

// Graph with concrete node ids.
typedef struct LpegnGraph LpegnGraph;

// Model with its weights.
typedef struct LpegnModel LpegnModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *lpegn_last_error(void);

// Library version as a static NUL-terminated string.
const char *lpegn_version(void);

// Basis of equivariant maps from order `k_in` to order `k_out` tensors
// over `size` nodes. With `n_dropped > 0`, the listed nodes are removed
// from the symmetry group.
//
// # Safety
// `dropped` must point to `n_dropped` values; `out` must be writable.
enum LpegnStatus lpegn_basis_new(size_t k_in,
                                 size_t k_out,
                                 size_t size,
                                 const size_t *dropped,
                                 size_t n_dropped,
                                 struct LpegnBasis **out);

// # Safety
// `basis` must be NULL or a live handle.
size_t lpegn_basis_len(const struct LpegnBasis *basis);

// Rows (`size^k_out`) and columns (`size^k_in`) of each basis tensor.
//
// # Safety
// `basis` must be a live handle; `rows` and `cols` writable.
enum LpegnStatus lpegn_basis_shape(const struct LpegnBasis *basis, size_t *rows, size_t *cols);

// Copies basis tensor `index` (row-major, rows x cols) into `out`.
//
// # Safety
// `basis` must be a live handle; `out` must hold `len` doubles.
enum LpegnStatus lpegn_basis_tensor(const struct LpegnBasis *basis,
                                    size_t index,
                                    double *out,
                                    size_t len);

// # Safety
// `basis` must be NULL or a handle not yet freed.
void lpegn_basis_free(struct LpegnBasis *basis);

// Graph over node ids `ids` with `n_edges` undirected edges given as
// consecutive id pairs in `edges`. `labels` may be NULL for unlabelled
// nodes.
//
// # Safety
// `ids` and `labels` must hold `n_nodes` values, `edges` `2 * n_edges`.
enum LpegnStatus lpegn_graph_new(const size_t *ids,
                                 size_t n_nodes,
                                 const size_t *edges,
                                 size_t n_edges,
                                 const size_t *labels,
                                 struct LpegnGraph **out);

// # Safety
// `graph` must be NULL or a live handle.
size_t lpegn_graph_num_nodes(const struct LpegnGraph *graph);

// # Safety
// `graph` must be NULL or a live handle.
size_t lpegn_graph_num_edges(const struct LpegnGraph *graph);

// # Safety
// `graph` must be NULL or a handle not yet freed.
void lpegn_graph_free(struct LpegnGraph *graph);

// Freshly initialized model from a JSON model configuration.
//
// # Safety
// `config_json` must be a NUL-terminated string; `out` writable.
enum LpegnStatus lpegn_model_from_config(const char *config_json, struct LpegnModel **out);

// Loads a model checkpoint.
//
// # Safety
// `path` must be a NUL-terminated string; `out` writable.
enum LpegnStatus lpegn_model_load(const char *path, struct LpegnModel **out);

// Writes a model checkpoint.
//
// # Safety
// `model` must be a live handle; `path` a NUL-terminated string.
enum LpegnStatus lpegn_model_save(const struct LpegnModel *model, const char *path);

// # Safety
// `model` must be NULL or a live handle.
size_t lpegn_model_num_classes(const struct LpegnModel *model);

// Class logits of `graph`; `out` must hold at least the class count.
//
// # Safety
// `model` and `graph` must be live handles; `out` must hold `len` doubles.
enum LpegnStatus lpegn_model_logits(const struct LpegnModel *model,
                                    const struct LpegnGraph *graph,
                                    double *out,
                                    size_t len);

// # Safety
// `model` must be NULL or a handle not yet freed.
void lpegn_model_free(struct LpegnModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LPEGN_H */
