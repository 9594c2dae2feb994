/* C interface to the occgrid occupancy-grid estimation library. */

#ifndef OCCGRID_H
#define OCCGRID_H

/* Generated by cbindgen from occgrid-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every fallible call.
 */
typedef enum OccgridStatus {
  OCCGRID_STATUS_OK = 0,
  OCCGRID_STATUS_NULL_POINTER = 1,
  OCCGRID_STATUS_INVALID_ARGUMENT = 2,
  OCCGRID_STATUS_CAPACITY = 3,
  OCCGRID_STATUS_IO = 4,
  OCCGRID_STATUS_INCONSISTENT_MEASUREMENT = 5,
  OCCGRID_STATUS_PANIC = 6,
} OccgridStatus;

/*
 Distance rule for the channel transition probabilities.
 */
typedef enum OccgridTransition {
  /*
   `p00 = (1 - pd) / (1 + d)^alpha`, `p01 = (1 - pfa) / (1 + d)^alpha`.
   */
  OCCGRID_TRANSITION_ATTENUATED = 0,
  /*
   `p00 = 1 - pfa / (1 + d)^alpha`, `p01 = 1 - pd / (1 + d)^alpha`.
   */
  OCCGRID_TRANSITION_INFLUENCE_DECAY = 1,
  /*
   The attenuated formulas evaluated at a fixed distance.
   */
  OCCGRID_TRANSITION_CONSTANT = 2,
} OccgridTransition;

/*
 Per-cell posterior probabilities together with their grid geometry.
 */
typedef struct OccgridField OccgridField;

/*
 An immutable scenario: grid, truth map, and measurement sequence.
 */
typedef struct OccgridScenario OccgridScenario;

/*
 Estimation knobs; see `occgrid_method_params_default` for the defaults.
 */
typedef struct OccgridMethodParams {
  enum OccgridTransition transition;
  double pd;
  double pfa;
  double alpha;
  double constant_distance;
  /*
   Cap on joint enumeration (gf / co / rgo).
   */
  size_t subset_cap;
  /*
   Gate count for rgo; section count on the toy layout.
   */
  size_t gate_count;
  double gate_overlap;
  size_t co_sections;
  size_t im_sections;
  size_t assoc_radius;
  double p_hit;
  double p_miss;
} OccgridMethodParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message describing the most recent failure on this thread. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *occgrid_last_error_message(void);

/*
 Library version as a static nul-terminated string.
 */
const char *occgrid_version(void);

/*
 Load a scenario file. On success `*out` owns a new handle.

 # Safety
 `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum OccgridStatus occgrid_scenario_load(const char *path, struct OccgridScenario **out);

/*
 Generate the toy scenario: an `nx` x `ny` grid of `cell_size` cells at
 `origin`, `truth` given row-major as 0/1 bytes (length `nx * ny`), each
 ping corrupting the ideal measurement through a BAC with `pd` / `pfa`.

 # Safety
 `truth` must point to `nx * ny` bytes; `out` must be a valid pointer.
 */
enum OccgridStatus occgrid_scenario_generate_toy(size_t nx,
                                                 size_t ny,
                                                 double cell_size,
                                                 double origin_x,
                                                 double origin_y,
                                                 const uint8_t *truth,
                                                 double pd,
                                                 double pfa,
                                                 size_t pings,
                                                 size_t samples_per_cell,
                                                 uint64_t seed,
                                                 struct OccgridScenario **out);

/*
 Write the scenario to its plain-text container format.

 # Safety
 `scenario` must be a live handle; `path` a nul-terminated string.
 */
enum OccgridStatus occgrid_scenario_save(const struct OccgridScenario *scenario, const char *path);

/*
 Number of grid cells.

 # Safety
 Both pointers must be valid.
 */
enum OccgridStatus occgrid_scenario_cells(const struct OccgridScenario *scenario, size_t *out);

/*
 Number of pings in the measurement sequence.

 # Safety
 Both pointers must be valid.
 */
enum OccgridStatus occgrid_scenario_pings(const struct OccgridScenario *scenario, size_t *out);

/*
 Copy the truth map into `buffer` (0/1 bytes, row-major); `len` must equal
 the cell count.

 # Safety
 `buffer` must point to `len` writable bytes.
 */
enum OccgridStatus occgrid_scenario_truth(const struct OccgridScenario *scenario,
                                          uint8_t *buffer,
                                          size_t len);

/*
 Defaults matching the library's estimator defaults.

 # Safety
 `out` must be a valid pointer.
 */
enum OccgridStatus occgrid_method_params_default(struct OccgridMethodParams *out);

/*
 Run one estimator (`"gf"`, `"co"`, `"rgo"`, `"im"` or `"cm"`) over the
 whole scenario; `*out` receives the final marginal field.

 # Safety
 `scenario` must be a live handle, `method` a nul-terminated string,
 `params` and `out` valid pointers.
 */
enum OccgridStatus occgrid_run(const struct OccgridScenario *scenario,
                               const char *method,
                               const struct OccgridMethodParams *params,
                               struct OccgridField **out);

/*
 Number of cells in the field.

 # Safety
 Both pointers must be valid.
 */
enum OccgridStatus occgrid_field_len(const struct OccgridField *field, size_t *out);

/*
 Copy the per-cell probabilities (row-major) into `buffer`; `len` must
 equal the field's cell count.

 # Safety
 `buffer` must point to `len` writable doubles.
 */
enum OccgridStatus occgrid_field_values(const struct OccgridField *field,
                                        double *buffer,
                                        size_t len);

/*
 Render the field to an 8-bit binary PGM image (darker = more probably
 occupied).

 # Safety
 `field` must be a live handle; `path` a nul-terminated string.
 */
enum OccgridStatus occgrid_field_save_pgm(const struct OccgridField *field, const char *path);

/*
 Similarity and summed Jensen-Shannon distance of a field against the
 scenario's truth map.

 # Safety
 All pointers must be valid.
 */
enum OccgridStatus occgrid_metrics(const struct OccgridScenario *scenario,
                                   const struct OccgridField *field,
                                   double *out_rho,
                                   double *out_sjsd);

/*
 Release a scenario handle. A null pointer is a no-op.

 # Safety
 `scenario` must have come from this library and not been freed before.
 */
void occgrid_scenario_free(struct OccgridScenario *scenario);

/*
 Release a field handle. A null pointer is a no-op.

 # Safety
 `field` must have come from this library and not been freed before.
 */
void occgrid_field_free(struct OccgridField *field);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OCCGRID_H */
