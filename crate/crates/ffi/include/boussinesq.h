#ifndef BOUSSINESQ_H
#define BOUSSINESQ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define BSQ_OK 0

#define BSQ_NULL_POINTER 1

#define BSQ_GRID_TOO_SMALL 2

#define BSQ_INVALID_PARAMETER 3

#define BSQ_SHAPE_MISMATCH 4

#define BSQ_INCOMPATIBLE 5

#define BSQ_NOT_SOLENOIDAL 6

#define BSQ_SINGULAR 7

#define BSQ_CFL 8

#define BSQ_TOO_LARGE 9

#define BSQ_NOT_ANALYTIC 10

#define BSQ_METHOD 11

#define BSQ_CONFIG 12

#define BSQ_CHECKPOINT 13

#define BSQ_IO 14

#define BSQ_INCONSISTENT 15

#define BSQ_INVALID_UTF8 16

#define BSQ_OUT_OF_RANGE 17

#define BSQ_PANIC 99

// Which command [`bsq_run`] executes.
typedef enum BsqCommand {
  BSQ_COMMAND_SCENARIO = 0,
  BSQ_COMMAND_STUDY = 1,
  BSQ_COMMAND_DUALITY = 2,
  BSQ_COMMAND_SEMIGROUP = 3,
} BsqCommand;

// Parsed scenario configuration.
typedef struct BsqConfig BsqConfig;

// Uniform staggered grid.
typedef struct BsqGrid BsqGrid;

// Result of a run: named checks, norms and timings.
typedef struct BsqReport BsqReport;

// One check of a report. `name` is owned by the caller; release it with
// [`bsq_string_free`].
typedef struct BsqCheck {
  const char *name;
  bool passed;
  double value;
  double tolerance;
} BsqCheck;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null after a
// success. Valid until the next call into the library on this thread.
const char *bsq_last_error(void);

// Library version as a static NUL-terminated string.
const char *bsq_version(void);

// Frees a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void bsq_string_free(char *s);

// Creates an `nx x ny` grid on `[0, lx] x [0, ly]`.
//
// # Safety
// `out` must be a valid pointer.
int32_t bsq_grid_new(size_t nx, size_t ny, double lx, double ly, struct BsqGrid **out);

// # Safety
// `grid` must come from [`bsq_grid_new`] and not have been freed, or be null.
void bsq_grid_free(struct BsqGrid *grid);

// Lengths of the x-velocity (`(nx + 1) ny`) and y-velocity
// (`nx (ny + 1)`) arrays.
//
// # Safety
// `grid`, `n_u` and `n_v` must be valid pointers.
int32_t bsq_grid_velocity_len(const struct BsqGrid *grid, size_t *n_u, size_t *n_v);

// Replaces the staggered velocity `(u, v)` by its divergence-free part
// (wall-normal entries are treated as zero). Arrays are row-major with
// the x index fastest.
//
// # Safety
// `grid` must be valid; `u` and `v` must point to `n_u` and `n_v`
// writable doubles.
int32_t bsq_grid_project(struct BsqGrid *grid, double *u, size_t n_u, double *v, size_t n_v);

// Largest absolute cell divergence of `(u, v)`.
//
// # Safety
// As for [`bsq_grid_project`]; the arrays are only read. `out` must be valid.
int32_t bsq_grid_max_divergence(const struct BsqGrid *grid,
                                const double *u,
                                size_t n_u,
                                const double *v,
                                size_t n_v,
                                double *out);

// Parses a scenario file held in `text`. Parse errors return
// `BSQ_CONFIG` with the line number in the message.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
int32_t bsq_config_parse(const char *text, struct BsqConfig **out);

// # Safety
// `cfg` must come from [`bsq_config_parse`] and not have been freed, or be null.
void bsq_config_free(struct BsqConfig *cfg);

// Overrides the output directory.
//
// # Safety
// `cfg` must be valid and `dir` NUL-terminated.
int32_t bsq_config_set_output(struct BsqConfig *cfg, const char *dir);

// Runs `command` on `cfg`, writing its files into the output directory.
// A run whose checks fail still returns `BSQ_OK`; query
// [`bsq_report_passed`].
//
// # Safety
// `cfg` must be valid and `out` a valid pointer.
int32_t bsq_run(const struct BsqConfig *cfg, enum BsqCommand command, struct BsqReport **out);

// # Safety
// `report` must come from [`bsq_run`] and not have been freed, or be null.
void bsq_report_free(struct BsqReport *report);

// # Safety
// `report` and `out` must be valid pointers.
int32_t bsq_report_passed(const struct BsqReport *report, bool *out);

// # Safety
// `report` and `out` must be valid pointers.
int32_t bsq_report_check_count(const struct BsqReport *report, size_t *out);

// Check `index` of the report. The name is written as a fresh string
// that the caller releases with [`bsq_string_free`].
//
// # Safety
// `report` and `out` must be valid pointers.
int32_t bsq_report_check(const struct BsqReport *report, size_t index, struct BsqCheck *out);

// Value of norm `key`; `BSQ_OUT_OF_RANGE` when the report has none.
//
// # Safety
// `report` and `out` must be valid and `key` NUL-terminated.
int32_t bsq_report_norm(const struct BsqReport *report, const char *key, double *out);

// The report as JSON; release with [`bsq_string_free`].
//
// # Safety
// `report` and `out` must be valid pointers.
int32_t bsq_report_json(const struct BsqReport *report, char **out);

// Validates a trajectory checkpoint: finite values and relative
// divergence at most `divergence_tol` on every level.
//
// # Safety
// `path` must be NUL-terminated and `passed` valid.
int32_t bsq_check_checkpoint(const char *path, double divergence_tol, bool *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BOUSSINESQ_H */
