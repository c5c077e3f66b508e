#ifndef FOGSIM_H
#define FOGSIM_H

/* Generated by cbindgen from fogsim-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status code of every fallible call.
 */
typedef enum FogsimStatus {
  FogsimStatus_Ok = 0,
  FogsimStatus_NullArgument = 1,
  FogsimStatus_InvalidArgument = 2,
  FogsimStatus_Utf8Error = 3,
  FogsimStatus_IoError = 4,
  FogsimStatus_InternalError = 5,
} FogsimStatus;

/*
 Synthetic deployment style.
 */
typedef enum FogsimStyle {
  FogsimStyle_MicroCells = 0,
  FogsimStyle_SmallCells = 1,
  FogsimStyle_LargeCells = 2,
  FogsimStyle_UmbrellaCells = 3,
} FogsimStyle;

/*
 Opaque scenario handle.
 */
typedef struct FogsimScenario FogsimScenario;

/*
 Per-architecture evaluation results. Arrays are indexed by level:
 0 = base stations, 1 = rings, 2 = pods, 3 = core switches. Ratios and
 distances are NaN when undefined (empty plans or zero hits).
 */
typedef struct FogsimEvaluation {
  uint64_t total_size_bytes[4];
  uint64_t total_size_items[4];
  double price_of_fog[4];
  double mean_distance_km[4];
  double achieved_hit_ratio;
  uint64_t marked_pairs;
  bool infeasible;
} FogsimEvaluation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string; never free it.
 */
const char *fogsim_version(void);

/*
 Message of the most recent failure on this thread, or NULL. The caller
 owns the returned string and must release it with `fogsim_string_free`.
 */
char *fogsim_last_error_message(void);

/*
 Frees a string returned by this library.

 # Safety
 `s` must be a pointer previously returned by `fogsim_last_error_message`
 or `fogsim_scenario_operators` (or NULL), not yet freed.
 */
void fogsim_string_free(char *s);

/*
 Builds a synthetic single-operator scenario. On success stores a new
 handle in `out`; release it with `fogsim_scenario_free`.

 # Safety
 `operator` must be a valid NUL-terminated string or NULL (defaults to
 "synth"); `out` must be a valid pointer.
 */
enum FogsimStatus fogsim_scenario_synth(const char *operator_,
                                        enum FogsimStyle style,
                                        uint32_t n_cells,
                                        uint32_t n_users,
                                        uint32_t hours,
                                        uint32_t requests_per_user_hour,
                                        uint32_t fanout,
                                        uint64_t seed,
                                        struct FogsimScenario **out);

/*
 Loads a scenario directory written by the CLI (`synth` or `ingest`).

 # Safety
 `dir` must be a valid NUL-terminated path; `out` must be valid.
 */
enum FogsimStatus fogsim_scenario_load(const char *dir, struct FogsimScenario **out);

/*
 Releases a scenario handle.

 # Safety
 `scenario` must be a handle from this library (or NULL), not yet freed.
 */
void fogsim_scenario_free(struct FogsimScenario *scenario);

/*
 Number of requests in the scenario.

 # Safety
 `scenario` and `out` must be valid pointers.
 */
enum FogsimStatus fogsim_scenario_request_count(const struct FogsimScenario *scenario,
                                                uint64_t *out);

/*
 Node counts per level for one operator, into `out[4]` indexed
 base stations / rings / pods / cores. A NULL operator sums over all
 operators.

 # Safety
 `scenario` must be valid; `out` must point to at least 4 u64 slots;
 `operator` must be a valid string or NULL.
 */
enum FogsimStatus fogsim_scenario_level_counts(const struct FogsimScenario *scenario,
                                               const char *operator_,
                                               uint64_t *out);

/*
 Evaluates the caching procedure for one operator at the given target hit
 ratio, after applying the recommendation (p) and locality (q)
 perturbations with the given seed. A NULL operator is accepted when the
 scenario holds exactly one. With `unit_sizes`, byte totals equal item
 counts.

 # Safety
 `scenario` and `out` must be valid pointers; `operator` must be a valid
 string or NULL.
 */
enum FogsimStatus fogsim_evaluate(const struct FogsimScenario *scenario,
                                  const char *operator_,
                                  double target_hit_ratio,
                                  double p,
                                  double q,
                                  bool unit_sizes,
                                  uint64_t seed,
                                  struct FogsimEvaluation *out);

/*
 Operator names joined by newlines, as a newly allocated string the
 caller frees with `fogsim_string_free`. Returns NULL on error.

 # Safety
 `scenario` must be a valid handle.
 */
char *fogsim_scenario_operators(const struct FogsimScenario *scenario);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FOGSIM_H */
