#pragma once

// End-to-end experiments: scenario configuration, ground-truth simulation,
// side-by-side EKF / recursive-EM runs, metrics and result files.

#include "soilrem/errors.hpp"
#include "soilrem/estimation.hpp"
#include "soilrem/sensor_placement.hpp"
#include "soilrem/soil_physics.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace soilrem {

/// Piecewise-constant value over simulated days.
struct Timeline {
  double initial = 0.0;
  std::vector<std::pair<double, double>> changes;  // (day, value), ascending days

  double at(double day) const;
};

/// Periodic irrigation pulse: `rate` for `pulse_seconds` at the start of every period.
struct IrrigationSchedule {
  double rate = 3e-7;             // q_T (m/s)
  double pulse_seconds = 3600.0;
  double period_seconds = kSecondsPerDay;
  double offset_seconds = 0.0;

  double at(double time_seconds) const;
};

enum class MismatchKind { kConstantUniform, kConstantPerNode, kParameterDrift };

enum class RmseMode { kRunning, kWindowed };

/// Unknown-input truth and first guess pinned at one node; the nodes in
/// between are linearly interpolated, the ends held constant.
struct InputAnchor {
  std::size_t node = 0;  // zero-based
  double truth = 0.0;
  double guess = 0.0;
};

struct ScenarioConfig {
  std::string name = "custom";
  int preset = 0;

  ColumnModel column;  // the estimator's model; under parameter drift its sink holds the guesses
  double horizon_days = 8.0;

  double initial_head = -1.0;          // uniform true x0 (m)
  double initial_guess_factor = 1.1;   // x_hat_0 = factor * x0
  double initial_covariance = 1e-2;    // P0 = value * I (m2)
  double process_variance = 4e-9;      // Q = value * I (m2)
  double measurement_variance = 8e-7;  // R = value * I ((m3/m3)2)

  MismatchKind mismatch = MismatchKind::kConstantUniform;
  Vector true_inputs;                  // per node, m per sampling interval; unused under drift
  Vector input_guess;                  // a_1 for the estimator
  std::vector<InputAnchor> anchors;    // kept for the summary echo
  Timeline true_crop_coefficient;      // parameter drift only
  Timeline true_evapotranspiration;    // parameter drift only (m/s)

  bool auto_sensors = false;
  std::vector<std::size_t> sensors;    // zero-based node indices
  PlacementOptions placement;

  StepSizeSchedule schedule;
  bool mstep_enabled = true;
  IrrigationSchedule irrigation;
  RmseMode rmse_mode = RmseMode::kRunning;
  std::size_t rmse_window = 720;
  std::uint64_t seed = 1;
  std::vector<std::size_t> reported_nodes{0, 5, 10, 15};

  std::size_t step_count() const;
  bool has_input_truth() const { return mismatch != MismatchKind::kParameterDrift; }
  void validate() const;
};

/// Builds one of the three case-study presets.
ScenarioConfig build_scenario(int preset);

/// Parses a JSON scenario file. Throws Error(kParse) naming the offending
/// location, Error(kIo) when unreadable.
ScenarioConfig load_scenario(const std::filesystem::path& path);
ScenarioConfig parse_scenario(const std::string& text, const std::string& origin = "<string>");

/// Linear interpolation of anchor values over node index, constant beyond the ends.
Vector interpolate_anchors(const std::vector<std::pair<std::size_t, double>>& anchors, std::size_t node_count);

/// Model the ground truth is generated with at a given time (drifting sink applied).
ColumnModel truth_column(const ScenarioConfig& config, double time_seconds);

/// The nominal irrigation input sequence u_0 .. u_{K-1}.
std::vector<double> input_sequence(const ScenarioConfig& config, std::size_t steps);

/// Sensor set used by a run: explicit, or greedy placement along the nominal trajectory.
std::vector<std::size_t> resolve_sensors(const ScenarioConfig& config);

/// Placement report for the configured column and irrigation.
SensorRanking place_sensors(const ScenarioConfig& config);

struct TruthTrajectory {
  std::vector<double> times;            // t_0 .. t_K (s)
  std::vector<Vector> states;           // x_0 .. x_K
  std::vector<double> inputs;           // u_0 .. u_{K-1}
  std::vector<Vector> measurements;     // y_1 .. y_K
  std::vector<Vector> true_inputs;      // a applied on each transition; empty under drift
};

TruthTrajectory simulate_truth(const ScenarioConfig& config, const std::vector<std::size_t>& sensors);

struct RunResult {
  std::size_t node_count = 0;
  std::vector<std::size_t> sensors;
  bool has_input_truth = true;
  std::vector<double> times;            // t_1 .. t_K
  std::vector<Vector> truth;
  std::vector<Vector> ekf;
  std::vector<Vector> rem;
  std::vector<Vector> measurements;
  std::vector<Vector> true_inputs;
  std::vector<Vector> rem_inputs;
  std::vector<Vector> rmse_ekf;
  std::vector<Vector> rmse_rem;
  std::optional<std::string> failure;

  std::size_t steps() const { return times.size(); }
};

/// Thrown when a run aborts on a numerical failure; carries everything
/// recorded up to the failing step.
class RunAborted : public Error {
 public:
  RunAborted(ErrorCode code, const std::string& message, RunResult partial)
      : Error(code, message), partial_(std::move(partial)) {}
  const RunResult& partial() const { return partial_; }

 private:
  RunResult partial_;
};

RunResult run_comparison(const ScenarioConfig& config);

struct RunSummary {
  Vector final_rmse_ekf;
  Vector final_rmse_rem;
  std::vector<std::optional<double>> convergence_days;  // per node; empty without input truth
};

/// First time after which |a_est - a_true| <= 10% |a_true| holds for 0.5 days.
std::optional<double> convergence_time_days(const RunResult& result, std::size_t node, double dt_seconds);

RunSummary summarize(const RunResult& result, const ScenarioConfig& config);

/// Writes trajectory.csv, rmse.csv and summary.json into `out_dir`.
void emit_results(const RunResult& result, const ScenarioConfig& config, const std::filesystem::path& out_dir);

/// Writes placement.json and placement.txt into `out_dir`; returns the text report.
std::string emit_placement(const SensorRanking& ranking, const ScenarioConfig& config,
                           const std::filesystem::path& out_dir);
std::string placement_report_text(const SensorRanking& ranking);

/// JSON echo of a configuration (the config block of summary.json).
std::string scenario_to_json(const ScenarioConfig& config, int indent = 2);

}  // namespace soilrem
