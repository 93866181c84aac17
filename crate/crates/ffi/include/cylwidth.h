#ifndef CYLWIDTH_H
#define CYLWIDTH_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CwStatus {
  CW_STATUS_OK = 0,
  CW_STATUS_NULL_POINTER = 1,
  /**
   * Bad dimensions, non-finite input, malformed JSON, rank deficiency.
   */
  CW_STATUS_INVALID_ARGUMENT = 2,
  CW_STATUS_GUARANTEE_MISSED = 3,
  CW_STATUS_NUMERICAL = 4,
  CW_STATUS_PANIC = 5,
} CwStatus;

/**
 * Finite group given by generators.
 */
typedef struct CwGroup CwGroup;

/**
 * Enumerated orbit.
 */
typedef struct CwOrbit CwOrbit;

/**
 * Orthonormal basis of a subspace.
 */
typedef struct CwSubspace CwSubspace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, static NUL-terminated string.
 */
const char *cw_version(void);

/**
 * Message of the last failure on this thread; empty if none. Valid until
 * the next failing call on the same thread.
 */
const char *cw_last_error(void);

/**
 * # Safety
 * `v` points to `d` doubles; `out` is writable.
 */
enum CwStatus cw_t_norm(const double *v, size_t d, double *out_value);

/**
 * Orthonormal basis of the span of `k` real columns of length `d`.
 *
 * # Safety
 * `columns` points to `d * k` doubles, column-major.
 */
enum CwStatus cw_subspace_from_columns(const double *columns,
                                       size_t d,
                                       size_t k,
                                       struct CwSubspace **out_subspace);

/**
 * As [`cw_subspace_from_columns`] with interleaved complex entries.
 *
 * # Safety
 * `columns` points to `2 * d * k` doubles.
 */
enum CwStatus cw_subspace_from_complex_columns(const double *columns,
                                               size_t d,
                                               size_t k,
                                               struct CwSubspace **out_subspace);

/**
 * # Safety
 * `subspace` is a live handle; the out-pointers are writable.
 */
enum CwStatus cw_subspace_shape(const struct CwSubspace *subspace, size_t *out_d, size_t *out_k);

/**
 * # Safety
 * `subspace` is null or came from this library and is not used afterwards.
 */
void cw_subspace_free(struct CwSubspace *subspace);

/**
 * `‖proj_W v‖₂`.
 *
 * # Safety
 * `v` points to `d` doubles.
 */
enum CwStatus cw_projection_norm(const struct CwSubspace *subspace,
                                 const double *v,
                                 size_t d,
                                 double *out_value);

/**
 * Alternating-maximization lower estimate of the width of the
 * signed-permutation orbit of `v`.
 *
 * # Safety
 * `v` points to `d` doubles.
 */
enum CwStatus cw_width_altmax(const struct CwSubspace *subspace,
                              const double *v,
                              size_t d,
                              size_t restarts,
                              uint64_t seed,
                              double *out_value);

/**
 * Exact width of the signed-permutation orbit of `v` (real, `d <= 8`).
 *
 * # Safety
 * `v` points to `d` doubles.
 */
enum CwStatus cw_width_brute(const struct CwSubspace *subspace,
                             const double *v,
                             size_t d,
                             double *out_value);

/**
 * Unit witness vector for the lower bound, written to `out_v[0..d]`.
 *
 * # Safety
 * `out_v` points to `d` writable doubles.
 */
enum CwStatus cw_witness_vector(size_t d, size_t k, double *out_v);

/**
 * Largest Gram eigenvalue and largest absolute Gram row sum of `m` real
 * vectors of length `d`; `out_holds` is 1 when the first is at most the
 * second.
 *
 * # Safety
 * `vectors` points to `d * m` doubles, one vector per column.
 */
enum CwStatus cw_selberg_check(const double *vectors,
                               size_t d,
                               size_t m,
                               double *out_lhs,
                               double *out_rhs,
                               int32_t *out_holds);

/**
 * Selects `k` columns of a real `2k × 4k` matrix with large `s_k`.
 * Writes the ascending indices to `out_columns[0..k]`.
 *
 * # Safety
 * `matrix` points to `8 k²` doubles, column-major; `out_columns` to `k`
 * writable entries.
 */
enum CwStatus cw_select_columns(const double *matrix,
                                size_t k,
                                size_t *out_columns,
                                double *out_achieved,
                                double *out_target);

/**
 * Parses a group description (NUL-terminated JSON). The symbolic
 * signed-permutation group is expanded to explicit generators.
 *
 * # Safety
 * `json` is a valid C string.
 */
enum CwStatus cw_group_from_json(const char *json, struct CwGroup **out_group);

/**
 * # Safety
 * `group` is a live handle.
 */
enum CwStatus cw_group_dimension(const struct CwGroup *group, size_t *out_d);

/**
 * # Safety
 * `group` is null or came from this library and is not used afterwards.
 */
void cw_group_free(struct CwGroup *group);

/**
 * Orbit of the real vector `v` under `group`, at most `max_size` points.
 *
 * # Safety
 * `v` points to `d` doubles.
 */
enum CwStatus cw_orbit_enumerate(const struct CwGroup *group,
                                 const double *v,
                                 size_t d,
                                 size_t max_size,
                                 struct CwOrbit **out_orbit);

/**
 * # Safety
 * `orbit` is a live handle.
 */
enum CwStatus cw_orbit_len(const struct CwOrbit *orbit, size_t *out_len);

/**
 * # Safety
 * `orbit` is null or came from this library and is not used afterwards.
 */
void cw_orbit_free(struct CwOrbit *orbit);

/**
 * `max_{x ∈ orbit} ‖proj_W x‖₂`.
 *
 * # Safety
 * Both handles are live.
 */
enum CwStatus cw_width_orbit(const struct CwSubspace *subspace,
                             const struct CwOrbit *orbit,
                             double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CYLWIDTH_H */
