#ifndef PCLSTM_H
#define PCLSTM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Values 2 to 4 match the command-line exit codes.
 */
typedef enum {
  PCLSTM_STATUS_OK = 0,
  PCLSTM_STATUS_NULL_POINTER = 1,
  PCLSTM_STATUS_INVALID_ARGUMENT = 2,
  PCLSTM_STATUS_NUMERICAL = 3,
  PCLSTM_STATUS_TRAINING_DIVERGED = 4,
  PCLSTM_STATUS_PANIC = 5,
} PclstmStatus;

/**
 * Trained two-port model.
 */
typedef struct PclstmBundle PclstmBundle;

/**
 * Array layout and dipole description.
 */
typedef struct PclstmGeometry PclstmGeometry;

/**
 * Square complex matrix result.
 */
typedef struct PclstmMatrix PclstmMatrix;

/**
 * Trained large-array refinement network.
 */
typedef struct PclstmSynthesisModel PclstmSynthesisModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *pclstm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pclstm_version(void);

/**
 * Parses a geometry JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
PclstmStatus pclstm_geometry_from_json(const char *json, PclstmGeometry **out);

/**
 * Number of dipoles in a geometry, or 0 for a null handle.
 *
 * # Safety
 * `geometry` must be null or a live handle.
 */
size_t pclstm_geometry_element_count(const PclstmGeometry *geometry);

/**
 * # Safety
 * `geometry` must be null or a handle not yet freed.
 */
void pclstm_geometry_free(PclstmGeometry *geometry);

/**
 * Port impedance matrix from the MoM solver.
 *
 * # Safety
 * `geometry` must be a live handle; `out` must be writable.
 */
PclstmStatus pclstm_mom_solve(const PclstmGeometry *geometry, PclstmMatrix **out);

/**
 * S-parameters of a port impedance matrix against a real reference impedance.
 *
 * # Safety
 * `z` must be a live handle; `out` must be writable.
 */
PclstmStatus pclstm_z_to_s(const PclstmMatrix *z, double ref_ohms, PclstmMatrix **out);

/**
 * Side length of a square matrix, or 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t pclstm_matrix_dim(const PclstmMatrix *m);

/**
 * Reads entry (p, q), zero-based.
 *
 * # Safety
 * `m` must be a live handle; `re` and `im` must be writable.
 */
PclstmStatus pclstm_matrix_get(const PclstmMatrix *m, size_t p, size_t q, double *re, double *im);

/**
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void pclstm_matrix_free(PclstmMatrix *m);

/**
 * Loads a two-port bundle from its JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
PclstmStatus pclstm_bundle_from_json(const char *json, PclstmBundle **out);

/**
 * # Safety
 * `bundle` must be null or a handle not yet freed.
 */
void pclstm_bundle_free(PclstmBundle *bundle);

/**
 * Predicted 2x2 port impedance matrix of a two-element geometry.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
PclstmStatus pclstm_predict_two_port(const PclstmBundle *bundle,
                                     const PclstmGeometry *geometry,
                                     PclstmMatrix **out);

/**
 * Loads a refinement network from its JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
PclstmStatus pclstm_synthesis_model_from_json(const char *json, PclstmSynthesisModel **out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void pclstm_synthesis_model_free(PclstmSynthesisModel *model);

/**
 * Port impedance matrix of a larger array. `model` may be null, which returns the
 * unrefined pairwise prior under the default spacing constraints.
 *
 * # Safety
 * `bundle` and `geometry` must be live handles, `model` null or live; `out` writable.
 */
PclstmStatus pclstm_synthesize(const PclstmBundle *bundle,
                               const PclstmSynthesisModel *model,
                               const PclstmGeometry *geometry,
                               PclstmMatrix **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PCLSTM_H */
