/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef MOTIFCOUNT_H
#define MOTIFCOUNT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum McStatus {
  MC_STATUS_OK = 0,
  /**
   * Nothing to sample from.
   */
  MC_STATUS_NONE_EXIST = 1,
  MC_STATUS_INVALID_ARGUMENT = 2,
  MC_STATUS_IO = 3,
  /**
   * Count overflow, size limit or enumeration guard.
   */
  MC_STATUS_CAPACITY = 4,
  MC_STATUS_MISMATCH = 5,
  MC_STATUS_NULL_POINTER = 6,
  MC_STATUS_PANIC = 7,
} McStatus;

typedef struct McGraph McGraph;

typedef struct McReport McReport;

typedef struct McTables McTables;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. Valid until
 * the next call on the same thread.
 */
const char *mc_last_error_message(void);

/**
 * Loads a whitespace-separated edge list or a binary graph cache.
 */
enum McStatus mc_graph_load(const char *path, struct McGraph **out);

/**
 * Builds a graph from `m` edges given as `2m` node ids in `0..n`.
 */
enum McStatus mc_graph_from_edges(size_t n, const uint32_t *edges, size_t m, struct McGraph **out);

size_t mc_graph_node_count(const struct McGraph *g);

size_t mc_graph_edge_count(const struct McGraph *g);

void mc_graph_free(struct McGraph *g);

/**
 * Colors the graph and builds the count tables of motif size `k` in `dir`.
 * `lambda <= 0` selects the uniform coloring. `threads == 0` uses every core.
 */
enum McStatus mc_build(const struct McGraph *g,
                       size_t k,
                       uint64_t seed,
                       double lambda,
                       const char *dir,
                       size_t threads,
                       struct McTables **out);

/**
 * Opens tables written by an earlier build.
 */
enum McStatus mc_tables_open(const char *dir, struct McTables **out);

size_t mc_tables_k(const struct McTables *t);

/**
 * Writes the colorful treelet total as a NUL-terminated decimal string.
 * Fails with `MC_STATUS_INVALID_ARGUMENT` if `cap` is too small.
 */
enum McStatus mc_tables_total(const struct McTables *t, char *buf, size_t cap);

void mc_tables_free(struct McTables *t);

/**
 * Uniform graphlet sampling with `samples` draws.
 */
enum McStatus mc_sample_uniform(const struct McTables *t,
                                const struct McGraph *g,
                                uint64_t samples,
                                uint64_t seed,
                                size_t threads,
                                struct McReport **out);

/**
 * Adaptive graphlet sampling with covering threshold `threshold` and at most `samples` draws.
 */
enum McStatus mc_sample_ags(const struct McTables *t,
                            const struct McGraph *g,
                            uint64_t threshold,
                            uint64_t samples,
                            uint64_t seed,
                            size_t threads,
                            struct McReport **out);

/**
 * Number of classes in the report.
 */
size_t mc_report_len(const struct McReport *r);

/**
 * Class `i`: its 128-bit signature as two halves, estimated count, samples and covered flag.
 * Any output pointer may be null.
 */
enum McStatus mc_report_class(const struct McReport *r,
                              size_t i,
                              uint64_t *signature_hi,
                              uint64_t *signature_lo,
                              double *count,
                              uint64_t *samples,
                              bool *covered);

enum McStatus mc_report_write_csv(const struct McReport *r, const char *path);

void mc_report_free(struct McReport *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOTIFCOUNT_H */
