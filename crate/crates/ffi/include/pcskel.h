#ifndef PCSKEL_H
#define PCSKEL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PcskelCode {
  PCSKEL_CODE_OK = 0,
  PCSKEL_CODE_NULL_ARGUMENT = 1,
  PCSKEL_CODE_INVALID_UTF8 = 2,
  PCSKEL_CODE_BAD_DOCUMENT = 3,
  PCSKEL_CODE_BAD_INPUT = 4,
  PCSKEL_CODE_FAULT = 5,
  PCSKEL_CODE_NOT_RUNNING = 6,
  PCSKEL_CODE_INVALID_ARGUMENT = 7,
  PCSKEL_CODE_PANIC = 8,
} PcskelCode;

typedef enum PcskelFormat {
  PCSKEL_FORMAT_JSON = 0,
  PCSKEL_FORMAT_SVG = 1,
  PCSKEL_FORMAT_OBJ = 2,
} PcskelFormat;

typedef enum PcskelStatus {
  PCSKEL_STATUS_RUNNING = 0,
  PCSKEL_STATUS_TERMINATED = 1,
  PCSKEL_STATUS_MAX_HEIGHT = 2,
  PCSKEL_STATUS_FAULTED = 3,
} PcskelStatus;

// Opaque engine handle.
typedef struct PcskelEngine PcskelEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread. Valid until the next
// call on the same thread.
const char *pcskel_last_error(void);

// Builds an engine from a NUL-terminated JSON document. `max_z` bounds the
// propagation height; pass NaN for none.
//
// # Safety
// `doc` must be a valid C string and `out` a valid pointer.
enum PcskelCode pcskel_engine_new(const char *doc, double max_z, struct PcskelEngine **out);

// # Safety
// `engine` must come from [`pcskel_engine_new`] and not be used afterwards.
void pcskel_engine_free(struct PcskelEngine *engine);

// Raises the wavefront by `dz`, stopping early at termination, at the
// maximum height, or (when `pause_at_event` is nonzero) after the first
// event. The height actually gained goes to `advanced` if non-null.
//
// # Safety
// `engine` must be a live handle; `advanced` null or valid.
enum PcskelCode pcskel_engine_step(struct PcskelEngine *engine,
                                   double dz,
                                   int32_t pause_at_event,
                                   double *advanced);

// Steps by `dz` until the propagation stops.
//
// # Safety
// `engine` must be a live handle.
enum PcskelCode pcskel_engine_run(struct PcskelEngine *engine, double dz);

// Sets the inclination of edge `edge` of loop `loop_index` (current loop
// numbering) to `alpha` radians.
//
// # Safety
// `engine` must be a live handle.
enum PcskelCode pcskel_engine_set_alpha(struct PcskelEngine *engine,
                                        size_t loop_index,
                                        size_t edge,
                                        double alpha);

// # Safety
// `engine` must be a live handle and `out` valid.
enum PcskelCode pcskel_engine_status(const struct PcskelEngine *engine, enum PcskelStatus *out);

// Current height of the wavefront.
//
// # Safety
// `engine` must be a live handle and `out` valid.
enum PcskelCode pcskel_engine_height(const struct PcskelEngine *engine, double *out);

// Renders the skeleton (JSON), the offsets and skeleton (SVG) or the roof
// (OBJ) into a new string owned by the caller. `format` is a
// [`PcskelFormat`] value.
//
// # Safety
// `engine` must be a live handle and `out` valid.
enum PcskelCode pcskel_engine_export(const struct PcskelEngine *engine, int32_t format, char **out);

// # Safety
// `s` must come from this library and not be used afterwards.
void pcskel_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PCSKEL_H */
