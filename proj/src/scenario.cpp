#include "soilrem/scenario.hpp"

#include "soilrem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace soilrem {

double Timeline::at(double day) const {
  double value = initial;
  for (const auto& [when, v] : changes) {
    if (day >= when) value = v;
  }
  return value;
}

double IrrigationSchedule::at(double time_seconds) const {
  if (rate == 0.0 || pulse_seconds <= 0.0) return 0.0;
  double phase = std::fmod(time_seconds - offset_seconds, period_seconds);
  if (phase < 0.0) phase += period_seconds;
  return phase < pulse_seconds ? rate : 0.0;
}

std::size_t ScenarioConfig::step_count() const {
  return static_cast<std::size_t>(std::llround(horizon_days * kSecondsPerDay / column.dt));
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kConfiguration, "scenario: " + m); };
  column.validate();
  const auto n = static_cast<Eigen::Index>(column.node_count);
  if (!(horizon_days > 0.0) || !std::isfinite(horizon_days)) fail("horizon must be positive");
  if (!std::isfinite(initial_head)) fail("initial head must be finite");
  if (!(initial_guess_factor > 0.0)) fail("initial guess factor must be positive");
  if (!(initial_covariance > 0.0)) fail("initial covariance must be positive");
  if (!(process_variance > 0.0) || !(measurement_variance > 0.0)) fail("noise variances must be positive");
  if (input_guess.size() != n) fail("unknown-input guess length must equal node count");
  if (has_input_truth() && true_inputs.size() != n) fail("unknown-input truth length must equal node count");
  if (!auto_sensors) {
    for (std::size_t s : sensors) {
      if (s >= column.node_count) fail("sensor index " + std::to_string(s + 1) + " outside the column");
    }
  }
  for (std::size_t s : reported_nodes) {
    if (s >= column.node_count) fail("reported node " + std::to_string(s + 1) + " outside the column");
  }
  if (schedule.kind == StepSizeSchedule::Kind::kFixed && !(schedule.gamma0 > 0.0 && schedule.gamma0 <= 1.0)) {
    fail("fixed step size must lie in (0, 1]");
  }
  if (!(irrigation.rate >= 0.0) || !(irrigation.period_seconds > 0.0)) fail("invalid irrigation schedule");
  if (rmse_mode == RmseMode::kWindowed && rmse_window == 0) fail("RMSE window must be positive");
}

Vector interpolate_anchors(const std::vector<std::pair<std::size_t, double>>& anchors, std::size_t node_count) {
  if (anchors.empty()) throw Error(ErrorCode::kConfiguration, "interpolate_anchors: no anchors");
  auto sorted = anchors;
  std::sort(sorted.begin(), sorted.end());
  Vector out(static_cast<Eigen::Index>(node_count));
  for (std::size_t i = 0; i < node_count; ++i) {
    double v;
    if (i <= sorted.front().first) {
      v = sorted.front().second;
    } else if (i >= sorted.back().first) {
      v = sorted.back().second;
    } else {
      auto hi = std::find_if(sorted.begin(), sorted.end(), [i](const auto& a) { return a.first >= i; });
      auto lo = hi - 1;
      const double w = static_cast<double>(i - lo->first) / static_cast<double>(hi->first - lo->first);
      v = (1.0 - w) * lo->second + w * hi->second;
    }
    out[static_cast<Eigen::Index>(i)] = v;
  }
  return out;
}

ScenarioConfig build_scenario(int preset) {
  ScenarioConfig c;
  c.preset = preset;
  const auto n = static_cast<Eigen::Index>(c.column.node_count);
  for (std::size_t i = 0; i < c.column.node_count; ++i) c.sensors.push_back(i);
  c.placement.augmented = false;
  switch (preset) {
    case 1:
      c.name = "scenario-1";
      c.mismatch = MismatchKind::kConstantUniform;
      c.true_inputs = Vector::Constant(n, 3e-5);
      c.input_guess = Vector::Zero(n);
      break;
    case 2: {
      c.name = "scenario-2";
      c.mismatch = MismatchKind::kConstantPerNode;
      c.anchors = {{0, 2.5e-5, 1e-6}, {5, 3e-5, 6e-6}, {10, 3.5e-5, 1.1e-5}, {15, 4e-5, 1.6e-5}};
      std::vector<std::pair<std::size_t, double>> truth, guess;
      for (const auto& a : c.anchors) {
        truth.emplace_back(a.node, a.truth);
        guess.emplace_back(a.node, a.guess);
      }
      c.true_inputs = interpolate_anchors(truth, c.column.node_count);
      c.input_guess = interpolate_anchors(guess, c.column.node_count);
      break;
    }
    case 3:
      c.name = "scenario-3";
      c.mismatch = MismatchKind::kParameterDrift;
      c.initial_head = -0.8;
      c.column.sink.enabled = true;
      c.column.sink.root_depth = c.column.depth;
      c.column.sink.crop_coefficient = 1.8;
      c.column.sink.evapotranspiration_rate = mm_per_day_to_m_per_s(1.3);
      c.true_crop_coefficient = {0.88, {{3.5, 1.08}}};
      c.true_evapotranspiration = {mm_per_day_to_m_per_s(1.4), {{3.5, mm_per_day_to_m_per_s(1.5)}}};
      c.true_inputs = Vector::Zero(n);
      c.input_guess = Vector::Zero(n);
      break;
    default:
      throw Error(ErrorCode::kConfiguration, "unknown scenario preset " + std::to_string(preset) + " (expected 1, 2 or 3)");
  }
  return c;
}

ColumnModel truth_column(const ScenarioConfig& config, double time_seconds) {
  ColumnModel col = config.column;
  if (config.mismatch == MismatchKind::kParameterDrift) {
    const double day = time_seconds / kSecondsPerDay;
    col.sink.enabled = true;
    col.sink.crop_coefficient = config.true_crop_coefficient.at(day);
    col.sink.evapotranspiration_rate = config.true_evapotranspiration.at(day);
  }
  return col;
}

std::vector<double> input_sequence(const ScenarioConfig& config, std::size_t steps) {
  std::vector<double> u(steps);
  for (std::size_t k = 0; k < steps; ++k) u[k] = config.irrigation.at(static_cast<double>(k) * config.column.dt);
  return u;
}

SensorRanking place_sensors(const ScenarioConfig& config) {
  config.column.validate();
  const RichardsModel model(config.column);
  const std::size_t n = config.column.node_count;
  const std::size_t dim = n + (config.placement.augmented ? n : 0);
  PlacementOptions options = config.placement;
  if (options.window == 0) options.window = 4 * dim;
  const Vector x0 = Vector::Constant(static_cast<Eigen::Index>(n), config.initial_head);
  const Trajectory nominal = simulate_nominal(model, x0, input_sequence(config, options.window));
  const auto gain = Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  return select_sensors(model, nominal, gain, options);
}

std::vector<std::size_t> resolve_sensors(const ScenarioConfig& config) {
  if (!config.auto_sensors) return config.sensors;
  return place_sensors(config).selected;
}

TruthTrajectory simulate_truth(const ScenarioConfig& config, const std::vector<std::size_t>& sensors) {
  const std::size_t steps = config.step_count();
  const auto n = static_cast<Eigen::Index>(config.column.node_count);
  const auto m = static_cast<Eigen::Index>(sensors.size());
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double process_sd = std::sqrt(config.process_variance);
  const double measurement_sd = std::sqrt(config.measurement_variance);

  TruthTrajectory t;
  t.times.reserve(steps + 1);
  t.states.reserve(steps + 1);
  t.inputs = input_sequence(config, steps);
  t.measurements.reserve(steps);
  t.times.push_back(0.0);
  t.states.push_back(Vector::Constant(n, config.initial_head));
  const Matrix gain = Matrix::Identity(n, n);

  for (std::size_t k = 0; k < steps; ++k) {
    const double time = static_cast<double>(k) * config.column.dt;
    const ColumnModel col = truth_column(config, time);
    Vector next = step_state(t.states.back(), t.inputs[k], col);
    if (config.has_input_truth()) {
      next += gain * config.true_inputs;
      t.true_inputs.push_back(config.true_inputs);
    }
    for (Eigen::Index i = 0; i < n; ++i) next[i] += process_sd * normal(rng);
    Vector y = output_map(next, sensors, col.params);
    for (Eigen::Index i = 0; i < m; ++i) y[i] += measurement_sd * normal(rng);
    t.times.push_back(time + config.column.dt);
    t.states.push_back(std::move(next));
    t.measurements.push_back(std::move(y));
  }
  return t;
}

namespace {

class RmseTracker {
 public:
  RmseTracker(Eigen::Index n, RmseMode mode, std::size_t window)
      : mode_(mode), window_(window), sum_(Vector::Zero(n)) {}

  Vector push(const Vector& error) {
    const Vector sq = error.cwiseAbs2();
    sum_ += sq;
    if (mode_ == RmseMode::kWindowed) {
      history_.push_back(sq);
      if (history_.size() > window_) {
        sum_ -= history_[history_.size() - window_ - 1];
      }
    }
    ++count_;
    const double denom = static_cast<double>(mode_ == RmseMode::kWindowed ? std::min(count_, window_) : count_);
    return (sum_.cwiseMax(0.0) / denom).cwiseSqrt();
  }

 private:
  RmseMode mode_;
  std::size_t window_;
  std::size_t count_ = 0;
  Vector sum_;
  std::vector<Vector> history_;
};

}  // namespace

RunResult run_comparison(const ScenarioConfig& config) {
  config.validate();
  const std::vector<std::size_t> sensors = resolve_sensors(config);
  const std::size_t n = config.column.node_count;
  TruthTrajectory truth;
  try {
    truth = simulate_truth(config, sensors);
  } catch (const InstabilityError& e) {
    RunResult empty;
    empty.node_count = n;
    empty.sensors = sensors;
    empty.has_input_truth = config.has_input_truth();
    empty.failure = std::string("ground-truth simulation failed: ") + e.what();
    throw RunAborted(e.code(), *empty.failure, std::move(empty));
  }

  const auto ni = static_cast<Eigen::Index>(n);
  const RichardsModel model(config.column);
  const NoiseModel noise =
      NoiseModel::isotropic(n, config.process_variance, sensors.size(), config.measurement_variance);

  StateBelief initial{Vector::Constant(ni, config.initial_guess_factor * config.initial_head),
                      config.initial_covariance * Matrix::Identity(ni, ni), 1};
  const UnknownInputVector guess = UnknownInputVector::with_identity_gain(config.input_guess);
  StateBelief ekf = initial;
  RemState rem = make_rem_state(initial, guess);
  const RemOptions options{config.schedule, config.mstep_enabled};

  RunResult result;
  result.node_count = n;
  result.sensors = sensors;
  result.has_input_truth = config.has_input_truth();
  const std::size_t steps = truth.measurements.size();
  RmseTracker track_ekf(ni, config.rmse_mode, config.rmse_window);
  RmseTracker track_rem(ni, config.rmse_mode, config.rmse_window);

  for (std::size_t k = 0; k < steps; ++k) {
    const Vector& y = truth.measurements[k];
    const double u = truth.inputs[k];
    try {
      ekf = ekf_step(ekf, y, u, guess, sensors, model, noise);
      rem = rem_step(std::move(rem), y, u, sensors, model, noise, options);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "run aborted at step " << k + 1 << " (t = " << truth.times[k + 1] << " s): " << e.what();
      result.failure = os.str();
      throw RunAborted(e.code(), os.str(), std::move(result));
    }
    const Vector& x = truth.states[k + 1];
    result.times.push_back(truth.times[k + 1]);
    result.truth.push_back(x);
    result.ekf.push_back(ekf.mean);
    result.rem.push_back(rem.belief.mean);
    result.measurements.push_back(y);
    if (result.has_input_truth) result.true_inputs.push_back(truth.true_inputs[k]);
    result.rem_inputs.push_back(rem.input.value);
    result.rmse_ekf.push_back(track_ekf.push(ekf.mean - x));
    result.rmse_rem.push_back(track_rem.push(rem.belief.mean - x));
  }
  return result;
}

std::optional<double> convergence_time_days(const RunResult& result, std::size_t node, double dt_seconds) {
  if (!result.has_input_truth || result.steps() == 0) return std::nullopt;
  const auto i = static_cast<Eigen::Index>(node);
  const auto hold = static_cast<std::size_t>(std::llround(0.5 * kSecondsPerDay / dt_seconds));
  std::size_t run = 0;  // consecutive in-band steps ending at k
  for (std::size_t k = 0; k < result.steps(); ++k) {
    const double truth = result.true_inputs[k][i];
    const bool inside = std::abs(result.rem_inputs[k][i] - truth) <= 0.1 * std::abs(truth);
    run = inside ? run + 1 : 0;
    if (run > hold) {
      const std::size_t first = k + 1 - run;
      return result.times[first] / kSecondsPerDay;
    }
  }
  return std::nullopt;
}

RunSummary summarize(const RunResult& result, const ScenarioConfig& config) {
  RunSummary s;
  const auto n = static_cast<Eigen::Index>(result.node_count);
  s.final_rmse_ekf = result.steps() ? result.rmse_ekf.back() : Vector::Zero(n);
  s.final_rmse_rem = result.steps() ? result.rmse_rem.back() : Vector::Zero(n);
  if (result.has_input_truth) {
    for (std::size_t i = 0; i < result.node_count; ++i) {
      s.convergence_days.push_back(convergence_time_days(result, i, config.column.dt));
    }
  }
  return s;
}

}  // namespace soilrem
