// Command-line front end: preset scenarios, config-file runs and sensor placement.
// Exit status: 0 success, 1 usage or input error, 2 numerical failure.

#include "soilrem/soilrem.h"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

struct SharedFlags {
  std::optional<std::uint64_t> seed;
  std::optional<double> gamma;
  std::optional<double> days;
  std::optional<int> substeps;
  std::string out;
};

struct ScenarioDeleter {
  void operator()(srm_scenario* s) const { srm_scenario_free(s); }
};
struct ResultDeleter {
  void operator()(srm_result* r) const { srm_result_free(r); }
};
struct PlacementDeleter {
  void operator()(srm_placement* p) const { srm_placement_free(p); }
};
using ScenarioPtr = std::unique_ptr<srm_scenario, ScenarioDeleter>;

int report(srm_status status, const char* context) {
  std::fprintf(stderr, "soilrem-cli: %s: %s: %s\n", context, srm_status_name(status), srm_last_error());
  return srm_status_is_numerical(status) ? kExitNumerical : kExitUsage;
}

void add_shared(CLI::App* cmd, SharedFlags& f) {
  cmd->add_option("--seed", f.seed, "RNG seed for process and measurement noise");
  cmd->add_option("--gamma", f.gamma, "fixed REM step size in (0, 1]");
  cmd->add_option("--days", f.days, "simulated horizon (days)");
  cmd->add_option("--substeps", f.substeps, "explicit Euler substeps per sampling interval");
  cmd->add_option("--out", f.out, "output directory (default: $SOILREM_OUT_DIR or ./soilrem-out)");
}

std::string output_dir(const SharedFlags& f) {
  if (!f.out.empty()) return f.out;
  if (const char* env = std::getenv("SOILREM_OUT_DIR"); env && *env) return env;
  return "soilrem-out";
}

int apply(srm_scenario* s, const SharedFlags& f) {
  srm_status st = SRM_OK;
  if (f.seed && (st = srm_scenario_set_seed(s, *f.seed)) != SRM_OK) return report(st, "--seed");
  if (f.gamma && (st = srm_scenario_set_gamma(s, *f.gamma)) != SRM_OK) return report(st, "--gamma");
  if (f.days && (st = srm_scenario_set_days(s, *f.days)) != SRM_OK) return report(st, "--days");
  if (f.substeps && (st = srm_scenario_set_substeps(s, *f.substeps)) != SRM_OK) return report(st, "--substeps");
  return kExitOk;
}

int run_and_write(srm_scenario* s, const SharedFlags& f) {
  if (int rc = apply(s, f); rc != kExitOk) return rc;
  srm_result* raw = nullptr;
  const srm_status st = srm_run_comparison(s, &raw);
  std::unique_ptr<srm_result, ResultDeleter> result(raw);
  const std::string dir = output_dir(f);
  if (st != SRM_OK && !result) return report(st, "run");

  // A failed run still leaves its partial record behind for inspection.
  if (srm_status w = srm_result_write(result.get(), dir.c_str()); w != SRM_OK) return report(w, "write");
  if (st != SRM_OK) {
    report(st, "run");
    std::fprintf(stderr, "soilrem-cli: partial results (%zu steps) written to %s\n", srm_result_steps(result.get()),
                 dir.c_str());
    return kExitNumerical;
  }

  const size_t n = srm_result_node_count(result.get());
  const size_t steps = srm_result_steps(result.get());
  std::vector<size_t> sensors(srm_result_sensor_count(result.get()));
  srm_result_sensors(result.get(), sensors.data());
  std::printf("steps: %zu, sensors:", steps);
  for (size_t node : sensors) std::printf(" %zu", node);
  std::printf("\n");
  if (steps > 0) {
    std::vector<double> ekf(n), rem(n), a(n);
    srm_result_rmse(result.get(), SRM_SERIES_EKF, steps - 1, ekf.data());
    srm_result_rmse(result.get(), SRM_SERIES_REM, steps - 1, rem.data());
    srm_result_inputs(result.get(), steps - 1, a.data());
    std::printf("%5s %14s %14s %14s\n", "node", "rmse_ekf", "rmse_rem", "a_rem");
    for (size_t i = 0; i < n; ++i) std::printf("%5zu %14.6g %14.6g %14.6g\n", i + 1, ekf[i], rem[i], a[i]);
  }
  std::printf("results written to %s\n", dir.c_str());
  return kExitOk;
}

ScenarioPtr load(const std::string& path, int& rc) {
  srm_scenario* raw = nullptr;
  const srm_status st = srm_scenario_load(path.c_str(), &raw);
  if (st != SRM_OK) rc = report(st, "config");
  return ScenarioPtr(raw);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soil moisture estimation with EKF and recursive-EM unknown-input correction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(srm_version()));

  SharedFlags flags;
  int preset = 0;
  std::string config;
  bool augmented = false;
  bool states_only = false;

  CLI::App* scenario = app.add_subcommand("scenario", "run a preset case study (1, 2 or 3)");
  scenario->add_option("preset", preset, "preset number")->required()->check(CLI::Range(1, 3));
  add_shared(scenario, flags);

  CLI::App* run = app.add_subcommand("run", "run a scenario described by a JSON config file");
  run->add_option("--config", config, "scenario config file")->required();
  add_shared(run, flags);

  CLI::App* place = app.add_subcommand("place-sensors", "rank sensor locations and pick a full-rank set");
  place->add_option("--config", config, "scenario config file")->required();
  auto* aug = place->add_flag("--augmented", augmented, "analyse states and unknown inputs jointly");
  auto* states = place->add_flag("--states-only", states_only, "analyse the states alone");
  aug->excludes(states);
  add_shared(place, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "soilrem-cli: %s\n\n", e.what());
    CLI::App* shown = &app;
    for (CLI::App* sub : app.get_subcommands()) shown = sub;
    std::fputs(shown->help().c_str(), stderr);
    return kExitUsage;
  }

  int rc = kExitOk;
  if (scenario->parsed()) {
    srm_scenario* raw = nullptr;
    if (srm_status st = srm_scenario_preset(preset, &raw); st != SRM_OK) return report(st, "scenario");
    ScenarioPtr s(raw);
    return run_and_write(s.get(), flags);
  }
  if (run->parsed()) {
    ScenarioPtr s = load(config, rc);
    if (!s) return rc;
    return run_and_write(s.get(), flags);
  }

  ScenarioPtr s = load(config, rc);
  if (!s) return rc;
  if ((rc = apply(s.get(), flags)) != kExitOk) return rc;
  if (augmented || states_only) srm_scenario_set_augmented_placement(s.get(), augmented ? 1 : 0);
  srm_placement* raw = nullptr;
  if (srm_status st = srm_place_sensors(s.get(), &raw); st != SRM_OK) return report(st, "place-sensors");
  std::unique_ptr<srm_placement, PlacementDeleter> placement(raw);
  const std::string dir = output_dir(flags);
  if (srm_status st = srm_placement_write(placement.get(), dir.c_str()); st != SRM_OK) return report(st, "write");
  size_t needed = 0;
  srm_placement_report(placement.get(), nullptr, 0, &needed);
  std::string text(needed, '\0');
  srm_placement_report(placement.get(), text.data(), text.size(), &needed);
  std::fputs(text.c_str(), stdout);
  std::printf("placement written to %s\n", dir.c_str());
  return kExitOk;
}
