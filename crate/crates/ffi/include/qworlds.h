#ifndef QWORLDS_H
#define QWORLDS_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QwStatus {
  QW_STATUS_OK = 0,
  QW_STATUS_NULL_POINTER = 1,
  QW_STATUS_INVALID_ARGUMENT = 2,
  QW_STATUS_DIMENSION_MISMATCH = 3,
  QW_STATUS_NOT_ORTHONORMAL = 4,
  QW_STATUS_INVALID_STATE = 5,
  QW_STATUS_NON_CONVERGENCE = 6,
  QW_STATUS_NUMERIC_FAILURE = 7,
  QW_STATUS_PARSE = 8,
  QW_STATUS_BUFFER_TOO_SMALL = 9,
  QW_STATUS_PANIC = 10,
} QwStatus;

typedef enum QwTailKind {
  QW_TAIL_KIND_PERIODIC = 0,
  QW_TAIL_KIND_CONVERGENT = 1,
} QwTailKind;

/**
 * Opaque world handle.
 */
typedef struct QwWorld QwWorld;

typedef struct QwChshReport {
  double quantum_value;
  double classical_bound;
  /**
   * `xx, xy, yx, yy`, unsigned.
   */
  double per_term_expectations[4];
  bool violated;
} QwChshReport;

typedef struct QwEnvelopeResult {
  double upper;
  double lower;
  double gap;
  double upper_floor;
  double lower_ceiling;
  size_t iterations;
  bool converged;
} QwEnvelopeResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *qw_last_error(void);

/**
 * The standard basis of dimension `dim`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum QwStatus qw_world_standard(size_t dim, struct QwWorld **out);

/**
 * A seeded random world.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum QwStatus qw_world_random(size_t dim, uint64_t seed, struct QwWorld **out);

/**
 * Parses a world document `{"dim": d, "basis": [[[re, im], ...], ...]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum QwStatus qw_world_from_json(const char *json, struct QwWorld **out);

/**
 * Serializes a world; release the string with `qw_string_free`.
 *
 * # Safety
 * `world` must come from a `qw_world_*` constructor and `out` be valid.
 */
enum QwStatus qw_world_to_json(const struct QwWorld *world, char **out);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library.
 */
void qw_string_free(char *s);

/**
 * Dimension of a world, or 0 for NULL.
 *
 * # Safety
 * `world` must be NULL or a live handle.
 */
size_t qw_world_dim(const struct QwWorld *world);

/**
 * # Safety
 * `world` must be NULL or a live handle; it is invalid afterwards.
 */
void qw_world_free(struct QwWorld *world);

/**
 * CHSH report for the Bell state `(|00⟩ + e^{i·phase}|11⟩)/√2`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum QwStatus qw_chsh(double phase, struct QwChshReport *out);

/**
 * Expectation of the observable with `eigenvalues` in `obs_world` in the
 * state with `weights` on `state_world`.
 *
 * # Safety
 * Arrays must hold `dim` elements; handles must be live.
 */
enum QwStatus qw_born_expectation(const struct QwWorld *state_world,
                                  const double *weights,
                                  const struct QwWorld *obs_world,
                                  const double *eigenvalues,
                                  size_t dim,
                                  double *out);

/**
 * Writes `T[n][k] = |⟨e_n|e'_k⟩|²` row-major into `buf`, which must hold
 * `dim²` values.
 *
 * # Safety
 * Handles must be live and `buf` must hold `len` values.
 */
enum QwStatus qw_transition_matrix(const struct QwWorld *world,
                                   const struct QwWorld *world2,
                                   double *buf,
                                   size_t len);

/**
 * Upper and lower extension envelopes of the state with `weights` on
 * `world` at the Hermitian target `re + i·im` (row-major, `dim²` each).
 * Returns `NON_CONVERGENCE` with `out` filled when the budget runs out.
 *
 * # Safety
 * Arrays must hold the stated number of values; the handle must be live.
 */
enum QwStatus qw_solve_envelopes(const struct QwWorld *world,
                                 const double *weights,
                                 const double *target_re,
                                 const double *target_im,
                                 size_t dim,
                                 double box_radius,
                                 double tol,
                                 size_t max_iter,
                                 struct QwEnvelopeResult *out);

/**
 * Banach limit of `prefix` followed by a periodic tail (`tail` holds the
 * period) or a convergent tail (`tail[0]` is the limit).
 *
 * # Safety
 * Arrays must hold the stated number of values.
 */
enum QwStatus qw_banach_limit(const double *prefix,
                              size_t prefix_len,
                              enum QwTailKind kind,
                              const double *tail,
                              size_t tail_len,
                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QWORLDS_H */
