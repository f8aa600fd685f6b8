#ifndef SOILREM_SOILREM_H
#define SOILREM_SOILREM_H

/* C interface to the soil-moisture estimation library.
 *
 * Every fallible call returns an srm_status; on failure the thread-local
 * message behind srm_last_error() says what went wrong. Handles are opaque
 * and owned by the caller once returned. Node indices are one-based.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(SOILREM_BUILDING_LIBRARY)
#define SRM_API __attribute__((visibility("default")))
#else
#define SRM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum srm_status {
  SRM_OK = 0,
  SRM_ERR_DOMAIN = 1,
  SRM_ERR_RANGE = 2,
  SRM_ERR_CONFIG = 3,
  SRM_ERR_PARSE = 4,
  SRM_ERR_INSTABILITY = 5,
  SRM_ERR_ILL_CONDITIONED = 6,
  SRM_ERR_UNOBSERVABLE = 7,
  SRM_ERR_STATE = 8,
  SRM_ERR_IO = 9,
  SRM_ERR_INVALID_ARGUMENT = 10,
  SRM_ERR_INTERNAL = 11
} srm_status;

typedef enum srm_series {
  SRM_SERIES_TRUTH = 0,
  SRM_SERIES_EKF = 1,
  SRM_SERIES_REM = 2
} srm_series;

typedef struct srm_scenario srm_scenario;
typedef struct srm_result srm_result;
typedef struct srm_placement srm_placement;

SRM_API const char* srm_version(void);
SRM_API const char* srm_status_name(srm_status status);
/* Message of the last failed call on this thread; "" if none. */
SRM_API const char* srm_last_error(void);
/* Nonzero for failures of the numerics (blow-up, ill-conditioning, unobservability). */
SRM_API int srm_status_is_numerical(srm_status status);

/* ---- scenarios ---- */

SRM_API srm_status srm_scenario_preset(int preset, srm_scenario** out);
SRM_API srm_status srm_scenario_load(const char* path, srm_scenario** out);
SRM_API srm_status srm_scenario_parse(const char* json_text, srm_scenario** out);
SRM_API void srm_scenario_free(srm_scenario* scenario);

SRM_API srm_status srm_scenario_set_seed(srm_scenario* scenario, uint64_t seed);
SRM_API srm_status srm_scenario_set_gamma(srm_scenario* scenario, double gamma);
SRM_API srm_status srm_scenario_set_days(srm_scenario* scenario, double days);
SRM_API srm_status srm_scenario_set_substeps(srm_scenario* scenario, int substeps);
SRM_API srm_status srm_scenario_set_mstep(srm_scenario* scenario, int enabled);
SRM_API srm_status srm_scenario_set_augmented_placement(srm_scenario* scenario, int augmented);

/* JSON echo of the scenario. Copies at most `capacity` bytes including the
 * terminator into `buffer` (may be NULL when capacity is 0) and reports the
 * full size, terminator included, through `needed`. */
SRM_API srm_status srm_scenario_to_json(const srm_scenario* scenario, char* buffer, size_t capacity, size_t* needed);

/* ---- EKF vs REM comparison runs ---- */

/* Runs both filters on one simulated measurement stream. On a numerical
 * failure the status reports it and *out still receives the partial result
 * recorded up to the failing step. */
SRM_API srm_status srm_run_comparison(const srm_scenario* scenario, srm_result** out);
SRM_API void srm_result_free(srm_result* result);

SRM_API size_t srm_result_steps(const srm_result* result);
SRM_API size_t srm_result_node_count(const srm_result* result);
SRM_API int srm_result_completed(const srm_result* result);
SRM_API size_t srm_result_sensor_count(const srm_result* result);
SRM_API srm_status srm_result_sensors(const srm_result* result, size_t* nodes_out);
SRM_API srm_status srm_result_time(const srm_result* result, size_t step, double* seconds);
/* Heads (m) of one series at a step; `out` holds node_count values. */
SRM_API srm_status srm_result_heads(const srm_result* result, srm_series series, size_t step, double* out);
/* Running RMSE per node of the EKF or REM series. */
SRM_API srm_status srm_result_rmse(const srm_result* result, srm_series series, size_t step, double* out);
/* REM unknown-input estimates per node after a step. */
SRM_API srm_status srm_result_inputs(const srm_result* result, size_t step, double* out);
/* Writes trajectory.csv, rmse.csv and summary.json into `directory`. */
SRM_API srm_status srm_result_write(const srm_result* result, const char* directory);

/* ---- sensor placement ---- */

SRM_API srm_status srm_place_sensors(const srm_scenario* scenario, srm_placement** out);
SRM_API void srm_placement_free(srm_placement* placement);
SRM_API size_t srm_placement_selected_count(const srm_placement* placement);
SRM_API srm_status srm_placement_selected(const srm_placement* placement, size_t* nodes_out);
SRM_API size_t srm_placement_achieved_rank(const srm_placement* placement);
SRM_API size_t srm_placement_target_rank(const srm_placement* placement);
SRM_API srm_status srm_placement_report(const srm_placement* placement, char* buffer, size_t capacity, size_t* needed);
/* Writes placement.json and placement.txt into `directory`. */
SRM_API srm_status srm_placement_write(const srm_placement* placement, const char* directory);

#ifdef __cplusplus
}
#endif

#endif /* SOILREM_SOILREM_H */
