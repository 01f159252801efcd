#ifndef PLAQED_H
#define PLAQED_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PlaqedStatus {
  PLAQED_STATUS_OK = 0,
  PLAQED_STATUS_NULL_POINTER = 1,
  PLAQED_STATUS_INVALID_ARGUMENT = 2,
  PLAQED_STATUS_INVALID_CLUSTER = 3,
  PLAQED_STATUS_NO_CONVERGENCE = 4,
  PLAQED_STATUS_BUFFER_TOO_SMALL = 5,
  PLAQED_STATUS_INTERNAL = 6,
} PlaqedStatus;

// Opaque cluster handle; owns the basis and matrix caches of the cluster.
typedef struct PlaqedCluster PlaqedCluster;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the last error message of this thread into `buf` (NUL terminated,
// truncated to `len`). Returns the full message length without the NUL.
//
// # Safety
// `buf` must be NULL or point to `len` writable bytes.
size_t plaqed_last_error_message(char *buf, size_t len);

// Cluster by catalog name ("16", "20", "32") or "x1,y1;x2,y2".
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum PlaqedStatus plaqed_cluster_new(const char *name, struct PlaqedCluster **out);

// Cluster spanned by `(x1, y1)` and `(x2, y2)`.
//
// # Safety
// `out` must be writable.
enum PlaqedStatus plaqed_cluster_from_vectors(int64_t x1,
                                              int64_t y1,
                                              int64_t x2,
                                              int64_t y2,
                                              struct PlaqedCluster **out);

// Release a cluster. NULL is ignored.
//
// # Safety
// `c` must come from `plaqed_cluster_new*` and not be used afterwards.
void plaqed_cluster_free(struct PlaqedCluster *c);

// # Safety
// `c` must be a live handle; `out` must be writable.
enum PlaqedStatus plaqed_cluster_n_sites(const struct PlaqedCluster *c, size_t *out);

// Lowest `count` eigenvalues in the sector `(2 Sz, k)` at couplings
// `(j, gamma, delta)`. `momentum` is e.g. "pi,0" or "0,0"; NULL selects the
// plain `Sz` basis. Writes `count` values into `out`; whole multiplets are
// kept internally, so the last values may belong to a larger multiplet.
//
// # Safety
// `c` must be a live handle, `momentum` NULL or NUL terminated, `out`
// writable for `count` doubles.
enum PlaqedStatus plaqed_lowest_energies(const struct PlaqedCluster *c,
                                         double j,
                                         double gamma,
                                         double delta,
                                         int32_t twice_sz,
                                         const char *momentum,
                                         size_t count,
                                         double *out);

// Number of valid dimer coverings of the cluster.
//
// # Safety
// `c` must be a live handle; `out` must be writable.
enum PlaqedStatus plaqed_count_coverings(const struct PlaqedCluster *c, size_t *out);

// Library version, static NUL-terminated string.
const char *plaqed_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLAQED_H */
