#ifndef SKETCHREWARD_H
#define SKETCHREWARD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum SrStatus {
  SR_STATUS_OK = 0,
  SR_STATUS_NULL_POINTER = 1,
  SR_STATUS_INVALID_UTF8 = 2,
  SR_STATUS_PARSE_ERROR = 3,
  SR_STATUS_LINK_ERROR = 4,
  SR_STATUS_INVALID_ARGUMENT = 5,
  SR_STATUS_BUFFER_TOO_SMALL = 6,
  SR_STATUS_PANIC = 7,
} SrStatus;

/**
 * A constraint file linked to a fixed number of holes.
 */
typedef struct SrConstraint SrConstraint;

/**
 * A parsed reward sketch.
 */
typedef struct SrSketch SrSketch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *sr_last_error(void);

/**
 * Library version, a static string.
 */
const char *sr_version(void);

/**
 * Parses `src` against the DoorKey event vocabulary.
 *
 * # Safety
 * `src` must be a nul-terminated string and `out` a valid pointer.
 */
enum SrStatus sr_sketch_parse_doorkey(const char *src, struct SrSketch **out);

/**
 * Parses `src` against a vocabulary of `n_tokens` token names.
 *
 * # Safety
 * `src` and each of the `n_tokens` entries of `tokens` must be
 * nul-terminated strings; `out` must be a valid pointer.
 */
enum SrStatus sr_sketch_parse(const char *src,
                              const char *const *tokens,
                              size_t n_tokens,
                              struct SrSketch **out);

/**
 * Releases a sketch; null is ignored.
 *
 * # Safety
 * `sketch` must come from a parse function and not be freed twice.
 */
void sr_sketch_free(struct SrSketch *sketch);

/**
 * Number of holes.
 *
 * # Safety
 * `sketch` must be a live handle and `out` a valid pointer.
 */
enum SrStatus sr_sketch_n_holes(const struct SrSketch *sketch, size_t *out);

/**
 * Per-step rewards of the program `sketch[holes]` on a trajectory given
 * by its `len` event token names. Writes `len` values to `rewards`.
 *
 * # Safety
 * Pointers must be valid for the given lengths; token names must be
 * nul-terminated.
 */
enum SrStatus sr_sketch_eval(const struct SrSketch *sketch,
                             const double *holes,
                             size_t n_holes,
                             const char *const *tokens,
                             size_t len,
                             double *rewards);

/**
 * Source text of the sketch, or of the complete program when `holes` is
 * given. `needed` receives the size including the terminating nul; the
 * text is written only if `cap` is large enough.
 *
 * # Safety
 * `buf` must be valid for `cap` bytes (may be null when `cap` is 0);
 * `holes` must be valid for `n_holes` values or null.
 */
enum SrStatus sr_sketch_print(const struct SrSketch *sketch,
                              const double *holes,
                              size_t n_holes,
                              char *buf,
                              size_t cap,
                              size_t *needed);

/**
 * Parses a constraint file and links it to `n_holes` holes.
 *
 * # Safety
 * `src` must be nul-terminated and `out` a valid pointer.
 */
enum SrStatus sr_constraint_parse(const char *src, size_t n_holes, struct SrConstraint **out);

/**
 * Releases a constraint; null is ignored.
 *
 * # Safety
 * `c` must come from [`sr_constraint_parse`] and not be freed twice.
 */
void sr_constraint_free(struct SrConstraint *c);

/**
 * `+1` if the holes satisfy the constraint, `-1` otherwise.
 *
 * # Safety
 * `holes` must be valid for `n_holes` values and `out` a valid pointer.
 */
enum SrStatus sr_constraint_eval(const struct SrConstraint *c,
                                 const double *holes,
                                 size_t n_holes,
                                 double *out);

/**
 * Smooth penalty of the constraint at `holes`.
 *
 * # Safety
 * `holes` must be valid for `n_holes` values and `out` a valid pointer.
 */
enum SrStatus sr_constraint_penalty(const struct SrConstraint *c,
                                    const double *holes,
                                    size_t n_holes,
                                    double *out);

/**
 * Gradient of the smooth penalty; writes `n_holes` values to `grad`.
 *
 * # Safety
 * `holes` and `grad` must be valid for `n_holes` values.
 */
enum SrStatus sr_constraint_penalty_grad(const struct SrConstraint *c,
                                         const double *holes,
                                         size_t n_holes,
                                         double *grad);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKETCHREWARD_H */
