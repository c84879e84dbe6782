#ifndef FORMBOUND_H
#define FORMBOUND_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  FB_STATUS_OK = 0,
  FB_STATUS_NULL_POINTER = 1,
  FB_STATUS_INVALID_ARGUMENT = 2,
  FB_STATUS_GRID_MISMATCH = 3,
  FB_STATUS_RANK_MISMATCH = 4,
  FB_STATUS_NOT_CONVERGED = 5,
  FB_STATUS_UNKNOWN_PRESET = 6,
  FB_STATUS_IO = 7,
  FB_STATUS_FORMAT = 8,
  FB_STATUS_PANIC = 9,
} FbStatus;

typedef enum {
  FB_FLAVOR_HOMOGENEOUS = 0,
  FB_FLAVOR_INHOMOGENEOUS = 1,
} FbFlavor;

typedef enum {
  FB_PIPELINE_HOMOGENEOUS = 0,
  FB_PIPELINE_INHOMOGENEOUS = 1,
  FB_PIPELINE_MAGNETIC = 2,
} FbPipeline;

typedef enum {
  FB_OVERALL_CERTIFIED_BOUNDED = 0,
  FB_OVERALL_CERTIFIED_UNBOUNDED_N2 = 1,
  FB_OVERALL_INCONCLUSIVE = 2,
} FbOverall;

/**
 * Field handle of any rank.
 */
typedef struct FbField FbField;

/**
 * Periodic grid handle.
 */
typedef struct FbGrid FbGrid;

/**
 * Verdict handle with its serialized report.
 */
typedef struct FbReport FbReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Owned by the library.
 */
const char *fb_last_error(void);

/**
 * # Safety
 * `out_grid` must be a valid pointer to writable storage.
 */
FbStatus fb_grid_new(size_t dim, size_t points_per_axis, double period, FbGrid **out_grid);

/**
 * # Safety
 * `grid` must come from `fb_grid_new` and not have been freed.
 */
void fb_grid_free(FbGrid *grid);

/**
 * Number of samples of the grid, 0 for null.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t fb_grid_len(const FbGrid *grid);

/**
 * Real field from `components * len(grid)` samples, component-major.
 * `components` is 1 (scalar), `dim` (vector) or `dim * dim` (matrix).
 *
 * # Safety
 * `values` must point to `count` readable doubles.
 */
FbStatus fb_field_from_real(const FbGrid *grid,
                            size_t components,
                            const double *values,
                            size_t count,
                            FbField **out_field);

/**
 * Load an FBF1 file.
 *
 * # Safety
 * `path` must be a NUL-terminated string.
 */
FbStatus fb_field_load(const char *path, double period, FbField **out_field);

/**
 * Save a field as FBF1; `complex` selects complex samples.
 *
 * # Safety
 * `field` must be a live handle and `path` a NUL-terminated string.
 */
FbStatus fb_field_save(const FbField *field, const char *path, bool complex);

/**
 * Drift `b` of a named coefficient preset.
 *
 * # Safety
 * `grid` must be a live handle and `name` a NUL-terminated string.
 */
FbStatus fb_preset_drift(const FbGrid *grid, const char *name, uint64_t seed, FbField **out_field);

/**
 * Potential `q` of a named coefficient preset.
 *
 * # Safety
 * As [`fb_preset_drift`].
 */
FbStatus fb_preset_potential(const FbGrid *grid,
                             const char *name,
                             uint64_t seed,
                             FbField **out_field);

/**
 * Cell density of a named measure preset.
 *
 * # Safety
 * As [`fb_preset_drift`].
 */
FbStatus fb_preset_measure(const FbGrid *grid, const char *name, FbField **out_field);

/**
 * # Safety
 * `field` must be null or a live handle.
 */
void fb_field_free(FbField *field);

/**
 * Number of scalar components (1, dim or dim^2), 0 for null.
 *
 * # Safety
 * `field` must be null or a live handle.
 */
size_t fb_field_components(const FbField *field);

/**
 * Copy the real parts of one component into `buffer` of `count` doubles.
 *
 * # Safety
 * `buffer` must point to `count` writable doubles.
 */
FbStatus fb_field_copy_real(const FbField *field, size_t component, double *buffer, size_t count);

/**
 * Dyadic Carleson constant of the measure with the given cell density.
 *
 * # Safety
 * `density` must be a live scalar handle, `out_value` writable.
 */
FbStatus fb_carleson_constant(const FbField *density, double *out_value);

/**
 * Trace constant of the measure with the given cell density.
 *
 * # Safety
 * As [`fb_carleson_constant`].
 */
FbStatus fb_trace_constant(const FbField *density, FbFlavor fl, double *out_value);

/**
 * Form norm of `div(A grad) + b . grad + q`; any coefficient may be null.
 *
 * # Safety
 * Non-null handles must be live; `out_value` writable.
 */
FbStatus fb_form_norm(const FbField *a,
                      const FbField *b,
                      const FbField *q,
                      FbFlavor fl,
                      double *out_value);

/**
 * Capacity of the ball `|x - center| <= radius` (center has `dim` entries).
 *
 * # Safety
 * `center` must point to `dim` doubles, `out_value` writable.
 */
FbStatus fb_capacity_ball(const FbGrid *grid,
                          const double *center,
                          double radius,
                          FbFlavor fl,
                          double *out_value);

/**
 * Run a certification pipeline with default thresholds. For the magnetic
 * pipeline `b` is the vector potential and `a` must be null.
 *
 * # Safety
 * Non-null handles must be live; `out_report` writable.
 */
FbStatus fb_verdict(FbPipeline pipeline,
                    const FbField *a,
                    const FbField *b,
                    const FbField *q,
                    FbReport **out_report);

/**
 * Overall outcome of a verdict; `Inconclusive` for null.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
FbOverall fb_report_overall(const FbReport *report);

/**
 * Direct form constant recorded in the verdict, NaN when absent.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
double fb_report_form_constant(const FbReport *report);

/**
 * JSON report text, valid until the report is freed.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
const char *fb_report_json(const FbReport *report);

/**
 * # Safety
 * `report` must be null or a live handle.
 */
void fb_report_free(FbReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FORMBOUND_H */
