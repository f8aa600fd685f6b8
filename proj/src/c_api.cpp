#include "soilrem/soilrem.h"

#include "soilrem/errors.hpp"
#include "soilrem/scenario.hpp"

#include <algorithm>
#include <cstring>
#include <new>
#include <string>

struct srm_scenario {
  soilrem::ScenarioConfig config;
};

struct srm_result {
  soilrem::RunResult run;
  soilrem::ScenarioConfig config;
};

struct srm_placement {
  soilrem::SensorRanking ranking;
  soilrem::ScenarioConfig config;
};

namespace {

thread_local std::string g_last_error;

srm_status status_of(soilrem::ErrorCode code) {
  using soilrem::ErrorCode;
  switch (code) {
    case ErrorCode::kDomain: return SRM_ERR_DOMAIN;
    case ErrorCode::kRange: return SRM_ERR_RANGE;
    case ErrorCode::kConfiguration: return SRM_ERR_CONFIG;
    case ErrorCode::kParse: return SRM_ERR_PARSE;
    case ErrorCode::kInstability: return SRM_ERR_INSTABILITY;
    case ErrorCode::kIllConditioned: return SRM_ERR_ILL_CONDITIONED;
    case ErrorCode::kUnobservable: return SRM_ERR_UNOBSERVABLE;
    case ErrorCode::kState: return SRM_ERR_STATE;
    case ErrorCode::kIo: return SRM_ERR_IO;
  }
  return SRM_ERR_INTERNAL;
}

srm_status fail(srm_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `body`, mapping exceptions to status codes.
template <class F>
srm_status guarded(F&& body) {
  try {
    return body();
  } catch (const soilrem::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SRM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SRM_ERR_INTERNAL, e.what());
  }
}

srm_status copy_text(const std::string& text, char* buffer, size_t capacity, size_t* needed) {
  if (needed) *needed = text.size() + 1;
  if (capacity == 0) return SRM_OK;
  if (!buffer) return fail(SRM_ERR_INVALID_ARGUMENT, "buffer is NULL but capacity is nonzero");
  const size_t n = std::min(capacity - 1, text.size());
  std::memcpy(buffer, text.data(), n);
  buffer[n] = '\0';
  return SRM_OK;
}

srm_status check_step(const srm_result* r, size_t step, const void* out) {
  if (!r || !out) return fail(SRM_ERR_INVALID_ARGUMENT, "NULL argument");
  if (step >= r->run.steps()) {
    return fail(SRM_ERR_RANGE, "step " + std::to_string(step) + " outside [0, " + std::to_string(r->run.steps()) + ")");
  }
  return SRM_OK;
}

void copy_vector(const soilrem::Vector& v, double* out) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v[i];
}

srm_status make_scenario(soilrem::ScenarioConfig config, srm_scenario** out) {
  *out = new srm_scenario{std::move(config)};
  return SRM_OK;
}

}  // namespace

extern "C" {

const char* srm_version(void) { return "0.1.0"; }

const char* srm_status_name(srm_status status) {
  switch (status) {
    case SRM_OK: return "ok";
    case SRM_ERR_DOMAIN: return "domain error";
    case SRM_ERR_RANGE: return "range error";
    case SRM_ERR_CONFIG: return "configuration error";
    case SRM_ERR_PARSE: return "parse error";
    case SRM_ERR_INSTABILITY: return "numerical instability";
    case SRM_ERR_ILL_CONDITIONED: return "ill-conditioned";
    case SRM_ERR_UNOBSERVABLE: return "unobservable";
    case SRM_ERR_STATE: return "invalid state";
    case SRM_ERR_IO: return "I/O error";
    case SRM_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SRM_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* srm_last_error(void) { return g_last_error.c_str(); }

int srm_status_is_numerical(srm_status status) {
  return status == SRM_ERR_INSTABILITY || status == SRM_ERR_ILL_CONDITIONED || status == SRM_ERR_UNOBSERVABLE;
}

srm_status srm_scenario_preset(int preset, srm_scenario** out) {
  if (!out) return fail(SRM_ERR_INVALID_ARGUMENT, "out is NULL");
  *out = nullptr;
  return guarded([&] { return make_scenario(soilrem::build_scenario(preset), out); });
}

srm_status srm_scenario_load(const char* path, srm_scenario** out) {
  if (!out || !path) return fail(SRM_ERR_INVALID_ARGUMENT, "NULL argument");
  *out = nullptr;
  return guarded([&] { return make_scenario(soilrem::load_scenario(path), out); });
}

srm_status srm_scenario_parse(const char* json_text, srm_scenario** out) {
  if (!out || !json_text) return fail(SRM_ERR_INVALID_ARGUMENT, "NULL argument");
  *out = nullptr;
  return guarded([&] { return make_scenario(soilrem::parse_scenario(json_text), out); });
}

void srm_scenario_free(srm_scenario* scenario) { delete scenario; }

srm_status srm_scenario_set_seed(srm_scenario* s, uint64_t seed) {
  if (!s) return fail(SRM_ERR_INVALID_ARGUMENT, "scenario is NULL");
  s->config.seed = seed;
  return SRM_OK;
}

srm_status srm_scenario_set_gamma(srm_scenario* s, double gamma) {
  if (!s) return fail(SRM_ERR_INVALID_ARGUMENT, "scenario is NULL");
  if (!(gamma > 0.0 && gamma <= 1.0)) return fail(SRM_ERR_DOMAIN, "gamma must lie in (0, 1]");
  s->config.schedule = soilrem::StepSizeSchedule::fixed(gamma);
  return SRM_OK;
}

srm_status srm_scenario_set_days(srm_scenario* s, double days) {
  if (!s) return fail(SRM_ERR_INVALID_ARGUMENT, "scenario is NULL");
  if (!(days > 0.0) || days > 1e6) return fail(SRM_ERR_DOMAIN, "days must be positive");
  s->config.horizon_days = days;
  return SRM_OK;
}

srm_status srm_scenario_set_substeps(srm_scenario* s, int substeps) {
  if (!s) return fail(SRM_ERR_INVALID_ARGUMENT, "scenario is NULL");
  if (substeps < 1) return fail(SRM_ERR_DOMAIN, "substeps must be >= 1");
  s->config.column.substeps = substeps;
  return SRM_OK;
}

srm_status srm_scenario_set_mstep(srm_scenario* s, int enabled) {
  if (!s) return fail(SRM_ERR_INVALID_ARGUMENT, "scenario is NULL");
  s->config.mstep_enabled = enabled != 0;
  return SRM_OK;
}

srm_status srm_scenario_set_augmented_placement(srm_scenario* s, int augmented) {
  if (!s) return fail(SRM_ERR_INVALID_ARGUMENT, "scenario is NULL");
  s->config.placement.augmented = augmented != 0;
  return SRM_OK;
}

srm_status srm_scenario_to_json(const srm_scenario* s, char* buffer, size_t capacity, size_t* needed) {
  if (!s) return fail(SRM_ERR_INVALID_ARGUMENT, "scenario is NULL");
  return guarded([&] { return copy_text(soilrem::scenario_to_json(s->config), buffer, capacity, needed); });
}

srm_status srm_run_comparison(const srm_scenario* s, srm_result** out) {
  if (!s || !out) return fail(SRM_ERR_INVALID_ARGUMENT, "NULL argument");
  *out = nullptr;
  return guarded([&] {
    try {
      *out = new srm_result{soilrem::run_comparison(s->config), s->config};
      return SRM_OK;
    } catch (const soilrem::RunAborted& e) {
      *out = new srm_result{e.partial(), s->config};
      return fail(status_of(e.code()), e.what());
    }
  });
}

void srm_result_free(srm_result* result) { delete result; }

size_t srm_result_steps(const srm_result* r) { return r ? r->run.steps() : 0; }

size_t srm_result_node_count(const srm_result* r) { return r ? r->run.node_count : 0; }

int srm_result_completed(const srm_result* r) { return r && !r->run.failure ? 1 : 0; }

size_t srm_result_sensor_count(const srm_result* r) { return r ? r->run.sensors.size() : 0; }

srm_status srm_result_sensors(const srm_result* r, size_t* nodes_out) {
  if (!r || !nodes_out) return fail(SRM_ERR_INVALID_ARGUMENT, "NULL argument");
  for (size_t i = 0; i < r->run.sensors.size(); ++i) nodes_out[i] = r->run.sensors[i] + 1;
  return SRM_OK;
}

srm_status srm_result_time(const srm_result* r, size_t step, double* seconds) {
  if (srm_status st = check_step(r, step, seconds); st != SRM_OK) return st;
  *seconds = r->run.times[step];
  return SRM_OK;
}

srm_status srm_result_heads(const srm_result* r, srm_series series, size_t step, double* out) {
  if (srm_status st = check_step(r, step, out); st != SRM_OK) return st;
  switch (series) {
    case SRM_SERIES_TRUTH: copy_vector(r->run.truth[step], out); return SRM_OK;
    case SRM_SERIES_EKF: copy_vector(r->run.ekf[step], out); return SRM_OK;
    case SRM_SERIES_REM: copy_vector(r->run.rem[step], out); return SRM_OK;
  }
  return fail(SRM_ERR_INVALID_ARGUMENT, "unknown series");
}

srm_status srm_result_rmse(const srm_result* r, srm_series series, size_t step, double* out) {
  if (srm_status st = check_step(r, step, out); st != SRM_OK) return st;
  switch (series) {
    case SRM_SERIES_EKF: copy_vector(r->run.rmse_ekf[step], out); return SRM_OK;
    case SRM_SERIES_REM: copy_vector(r->run.rmse_rem[step], out); return SRM_OK;
    case SRM_SERIES_TRUTH: break;
  }
  return fail(SRM_ERR_INVALID_ARGUMENT, "RMSE exists for the EKF and REM series only");
}

srm_status srm_result_inputs(const srm_result* r, size_t step, double* out) {
  if (srm_status st = check_step(r, step, out); st != SRM_OK) return st;
  copy_vector(r->run.rem_inputs[step], out);
  return SRM_OK;
}

srm_status srm_result_write(const srm_result* r, const char* directory) {
  if (!r || !directory) return fail(SRM_ERR_INVALID_ARGUMENT, "NULL argument");
  return guarded([&] {
    soilrem::emit_results(r->run, r->config, directory);
    return SRM_OK;
  });
}

srm_status srm_place_sensors(const srm_scenario* s, srm_placement** out) {
  if (!s || !out) return fail(SRM_ERR_INVALID_ARGUMENT, "NULL argument");
  *out = nullptr;
  return guarded([&] {
    *out = new srm_placement{soilrem::place_sensors(s->config), s->config};
    return SRM_OK;
  });
}

void srm_placement_free(srm_placement* p) { delete p; }

size_t srm_placement_selected_count(const srm_placement* p) { return p ? p->ranking.selected.size() : 0; }

srm_status srm_placement_selected(const srm_placement* p, size_t* nodes_out) {
  if (!p || !nodes_out) return fail(SRM_ERR_INVALID_ARGUMENT, "NULL argument");
  for (size_t i = 0; i < p->ranking.selected.size(); ++i) nodes_out[i] = p->ranking.selected[i] + 1;
  return SRM_OK;
}

size_t srm_placement_achieved_rank(const srm_placement* p) { return p ? p->ranking.achieved_rank : 0; }

size_t srm_placement_target_rank(const srm_placement* p) { return p ? p->ranking.target_rank : 0; }

srm_status srm_placement_report(const srm_placement* p, char* buffer, size_t capacity, size_t* needed) {
  if (!p) return fail(SRM_ERR_INVALID_ARGUMENT, "placement is NULL");
  return guarded([&] { return copy_text(soilrem::placement_report_text(p->ranking), buffer, capacity, needed); });
}

srm_status srm_placement_write(const srm_placement* p, const char* directory) {
  if (!p || !directory) return fail(SRM_ERR_INVALID_ARGUMENT, "NULL argument");
  return guarded([&] {
    soilrem::emit_placement(p->ranking, p->config, directory);
    return SRM_OK;
  });
}

}  // extern "C"
