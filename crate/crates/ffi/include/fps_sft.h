#ifndef FPS_SFT_H
#define FPS_SFT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes shared by every fallible entry point.
typedef enum FpsStatus {
  FPS_STATUS_OK = 0,
  FPS_STATUS_NULL_POINTER = 1,
  FPS_STATUS_INVALID_ARGUMENT = 2,
  FPS_STATUS_PARSE = 3,
  FPS_STATUS_UNSUPPORTED = 4,
  FPS_STATUS_OUT_OF_RANGE = 5,
  FPS_STATUS_PANIC = 6,
} FpsStatus;

typedef enum FpsAlgorithm {
  FPS_ALGORITHM_FPS = 0,
  FPS_ALGORITHM_BASELINE = 1,
} FpsAlgorithm;

typedef enum FpsTermination {
  FPS_TERMINATION_RESIDUAL_CLEAN = 0,
  FPS_TERMINATION_STALL = 1,
  FPS_TERMINATION_MAX_ITERATIONS = 2,
} FpsTermination;

// Opaque recovery report.
typedef struct FpsReport FpsReport;

// Opaque sparse spectrum.
typedef struct FpsSpectrum FpsSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message into `buf` (NUL-terminated, truncated to
// `len`) and returns the full message length, or 0 when there is none.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
uintptr_t fps_last_error_message(char *buf, uintptr_t len);

// Creates an empty spectrum on the grid `dims[0] x ... x dims[ndim-1]`.
//
// # Safety
// `dims` must point to `ndim` values; `out` must be writable.
enum FpsStatus fps_spectrum_new(const uintptr_t *dims, uintptr_t ndim, struct FpsSpectrum **out);

// # Safety
// `spectrum` must be null or a handle from this library not yet freed.
void fps_spectrum_free(struct FpsSpectrum *spectrum);

// Sets the amplitude at `freq`; a zero amplitude removes the entry.
//
// # Safety
// `spectrum` must be a live handle and `freq` must point to `ndim` values.
enum FpsStatus fps_spectrum_insert(struct FpsSpectrum *spectrum,
                                   const uintptr_t *freq,
                                   uintptr_t ndim,
                                   double re,
                                   double im);

// Number of stored frequencies, or 0 for a null handle.
//
// # Safety
// `spectrum` must be null or a live handle.
uintptr_t fps_spectrum_len(const struct FpsSpectrum *spectrum);

// Number of grid dimensions, or 0 for a null handle.
//
// # Safety
// `spectrum` must be null or a live handle.
uintptr_t fps_spectrum_ndim(const struct FpsSpectrum *spectrum);

// Reads entry `index` in lexicographic frequency order.
//
// # Safety
// `spectrum` must be a live handle, `freq` must have room for `ndim`
// values, and `re`/`im` must be writable.
enum FpsStatus fps_spectrum_get(const struct FpsSpectrum *spectrum,
                                uintptr_t index,
                                uintptr_t *freq,
                                uintptr_t ndim,
                                double *re,
                                double *im);

// Parses the text spectrum format.
//
// # Safety
// `input` must be a NUL-terminated string; `out` must be writable.
enum FpsStatus fps_spectrum_parse(const char *input, struct FpsSpectrum **out);

// Renders the spectrum in the text format. Release with [`fps_string_free`].
// Returns null for a null handle.
//
// # Safety
// `spectrum` must be null or a live handle.
char *fps_spectrum_to_text(const struct FpsSpectrum *spectrum);

// # Safety
// `s` must be null or a string returned by this library not yet freed.
void fps_string_free(char *s);

// Draws a random `k`-sparse spectrum. `placement` is `"uniform"`,
// `"clustered9"` or `"clustered25"`.
//
// # Safety
// `dims` must point to `ndim` values, `placement` must be a NUL-terminated
// string, and `out` must be writable.
enum FpsStatus fps_generate(const uintptr_t *dims,
                            uintptr_t ndim,
                            uintptr_t k,
                            const char *placement,
                            uint64_t seed,
                            struct FpsSpectrum **out);

// Recovers `spectrum` by sampling the signal it defines. A zero
// `max_iterations` selects the default budget.
//
// # Safety
// `spectrum` must be a live handle; `out` must be writable.
enum FpsStatus fps_recover(const struct FpsSpectrum *spectrum,
                           enum FpsAlgorithm algorithm,
                           uint64_t seed,
                           uintptr_t max_iterations,
                           struct FpsReport **out);

// # Safety
// `report` must be null or a handle from this library not yet freed.
void fps_report_free(struct FpsReport *report);

// # Safety
// `report` must be null or a live handle.
uintptr_t fps_report_iterations(const struct FpsReport *report);

// # Safety
// `report` must be null or a live handle.
uint64_t fps_report_samples_used(const struct FpsReport *report);

// # Safety
// `report` must be a live handle; `out` must be writable.
enum FpsStatus fps_report_termination(const struct FpsReport *report, enum FpsTermination *out);

// Copies the recovered spectrum into a new handle.
//
// # Safety
// `report` must be a live handle; `out` must be writable.
enum FpsStatus fps_report_recovered(const struct FpsReport *report, struct FpsSpectrum **out);

// Nonzero when `recovered` equals `truth` within relative tolerance `rel_tol`.
//
// # Safety
// Both handles must be null or live.
int32_t fps_spectrum_matches(const struct FpsSpectrum *recovered,
                             const struct FpsSpectrum *truth,
                             double rel_tol);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FPS_SFT_H */
