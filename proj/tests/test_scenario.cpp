#include "soilrem/errors.hpp"
#include "soilrem/scenario.hpp"

#include <json.hpp>

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace soilrem;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("soilrem_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

ErrorCode parse_error_code(const std::string& text) {
  try {
    parse_scenario(text, "test.json");
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a parse failure for " << text);
  return ErrorCode::kState;
}

std::string parse_error_message(const std::string& text) {
  try {
    parse_scenario(text, "test.json");
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

ScenarioConfig short_run(int preset, double days) {
  ScenarioConfig c = build_scenario(preset);
  c.horizon_days = days;
  return c;
}

}  // namespace

TEST_CASE("timelines and irrigation pulses") {
  const Timeline t{0.88, {{3.5, 1.08}, {6.0, 0.9}}};
  CHECK(t.at(0.0) == 0.88);
  CHECK(t.at(3.49) == 0.88);
  CHECK(t.at(3.5) == 1.08);
  CHECK(t.at(7.0) == 0.9);

  const IrrigationSchedule irr{3e-7, 3600.0, kSecondsPerDay, 0.0};
  CHECK(irr.at(0.0) == 3e-7);
  CHECK(irr.at(3599.0) == 3e-7);
  CHECK(irr.at(3600.0) == 0.0);
  CHECK(irr.at(kSecondsPerDay + 10.0) == 3e-7);
  const IrrigationSchedule off{0.0, 3600.0, kSecondsPerDay, 0.0};
  CHECK(off.at(0.0) == 0.0);
}

TEST_CASE("anchor interpolation") {
  const Vector v = interpolate_anchors({{0, 1.0}, {5, 2.0}, {15, 4.0}}, 16);
  CHECK(v[0] == 1.0);
  CHECK(v[5] == 2.0);
  CHECK(v[3] == doctest::Approx(1.6));
  CHECK(v[10] == doctest::Approx(3.0));
  CHECK(v[15] == 4.0);
  const Vector held = interpolate_anchors({{4, 2.0}, {8, 3.0}}, 12);
  CHECK(held[0] == 2.0);
  CHECK(held[11] == 3.0);
  CHECK_THROWS_AS(interpolate_anchors({}, 4), Error);
}

TEST_CASE("presets are valid and distinct") {
  for (int p = 1; p <= 3; ++p) {
    CAPTURE(p);
    const ScenarioConfig c = build_scenario(p);
    CHECK_NOTHROW(c.validate());
    CHECK(c.column.node_count == 16);
    CHECK(c.step_count() == 5760);
  }
  CHECK(build_scenario(1).mismatch == MismatchKind::kConstantUniform);
  CHECK(build_scenario(1).true_inputs.isConstant(3e-5));
  CHECK(build_scenario(2).mismatch == MismatchKind::kConstantPerNode);
  CHECK(build_scenario(3).mismatch == MismatchKind::kParameterDrift);
  CHECK_THROWS_AS(build_scenario(4), Error);
}

TEST_CASE("drifting truth column follows the timelines") {
  const ScenarioConfig c = build_scenario(3);
  CHECK(truth_column(c, 0.0).sink.crop_coefficient == 0.88);
  CHECK(truth_column(c, 4.0 * kSecondsPerDay).sink.crop_coefficient == 1.08);
  CHECK(c.column.sink.crop_coefficient == 1.8);
}

TEST_CASE("config parsing: presets with overrides") {
  const ScenarioConfig c = parse_scenario(R"({"preset": 2, "seed": 9, "horizon_days": 1.5,
      "step_size": {"kind": "fixed", "gamma0": 0.001}, "sensors": [1, 8, 16]})");
  CHECK(c.mismatch == MismatchKind::kConstantPerNode);
  CHECK(c.seed == 9);
  CHECK(c.horizon_days == 1.5);
  CHECK(c.schedule.gamma0 == 0.001);
  CHECK(c.sensors == std::vector<std::size_t>{0, 7, 15});
}

TEST_CASE("config parsing: full custom column") {
  const ScenarioConfig c = parse_scenario(R"({
      "name": "sandy", "horizon_days": 0.5,
      "column": {"depth_m": 0.4, "node_count": 8, "dt_s": 60, "substeps": 6,
                 "soil": {"saturated_conductivity_m_per_s": 1e-5, "theta_s": 0.41, "theta_r": 0.05,
                          "alpha_per_m": 7.5, "n": 1.9}},
      "mismatch": {"kind": "constant_uniform", "value": 1e-5, "guess": 0},
      "sensors": "auto", "placement": {"augmented": false},
      "reported_nodes": [1, 8]})");
  CHECK(c.column.node_count == 8);
  CHECK(c.column.params.n == 1.9);
  CHECK(c.auto_sensors);
  CHECK_FALSE(c.placement.augmented);
  CHECK(c.true_inputs.size() == 8);
  CHECK(c.reported_nodes == std::vector<std::size_t>{0, 7});
}

TEST_CASE("config parse errors name the location") {
  CHECK(parse_error_code("{not json") == ErrorCode::kParse);
  CHECK(parse_error_code(R"({"colum": {}})") == ErrorCode::kParse);
  CHECK(parse_error_message(R"({"colum": {}})").find("/colum") != std::string::npos);
  CHECK(parse_error_message(R"({"column": {"dt_s": "fast"}})").find("/column/dt_s") != std::string::npos);
  CHECK(parse_error_message(R"({"preset": 1, "sensors": [0]})").find("test.json") != std::string::npos);
  CHECK(parse_error_code(R"({"preset": 1, "sensors": [17]})") == ErrorCode::kParse);
  CHECK(parse_error_message(R"({"preset": 1, "sensors": [17]})").find("/sensors/0") != std::string::npos);
  CHECK(parse_error_code(R"({"preset": 1, "step_size": {"kind": "cosine"}})") == ErrorCode::kParse);
  CHECK(parse_error_code(R"({"preset": 1, "column": {"node_count": 8}})") != ErrorCode::kState);
  CHECK(parse_error_code(R"({"preset": 1, "column": {"soil": {"n": 0.9}}})") == ErrorCode::kConfiguration);
}

TEST_CASE("missing config file is an I/O error") {
  try {
    load_scenario("/nonexistent/soilrem.json");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
  }
}

TEST_CASE("config JSON round trip") {
  for (int p = 1; p <= 3; ++p) {
    CAPTURE(p);
    const std::string once = scenario_to_json(build_scenario(p));
    const std::string twice = scenario_to_json(parse_scenario(once));
    CHECK(once == twice);
  }
}

TEST_CASE("empty result writes headers only") {
  const fs::path dir = scratch_dir("empty");
  RunResult r;
  r.node_count = 16;
  emit_results(r, build_scenario(1), dir);
  CHECK(read_lines(dir / "trajectory.csv").size() == 1);
  CHECK(read_lines(dir / "rmse.csv").size() == 1);
  const auto summary = nlohmann::json::parse(std::ifstream(dir / "summary.json"));
  CHECK(summary["steps"] == 0);
}

TEST_CASE("one-step run writes one row per node") {
  ScenarioConfig c = build_scenario(1);
  c.horizon_days = c.column.dt / kSecondsPerDay;
  REQUIRE(c.step_count() == 1);
  const RunResult r = run_comparison(c);
  const fs::path dir = scratch_dir("one_step");
  emit_results(r, c, dir);
  CHECK(read_lines(dir / "trajectory.csv").size() == 17);
  CHECK(read_lines(dir / "rmse.csv").size() == 17);
}

TEST_CASE("trajectory CSV round trip to 12 significant digits") {
  const ScenarioConfig c = short_run(2, 0.05);
  const RunResult r = run_comparison(c);
  const fs::path dir = scratch_dir("roundtrip");
  emit_results(r, c, dir);
  const auto lines = read_lines(dir / "trajectory.csv");
  REQUIRE(lines.size() == r.steps() * 16 + 1);
  CHECK(lines[0] == "time_s,node,h_true,h_ekf,h_rem,theta_true,theta_meas_if_sensed,a_true,a_rem");
  auto close = [](const std::string& text, double value) {
    return std::abs(std::stod(text) - value) <= 1e-11 * std::abs(value);
  };
  for (std::size_t k = 0; k < r.steps(); ++k) {
    for (Eigen::Index i = 0; i < 16; ++i) {
      const auto f = split(lines[1 + k * 16 + static_cast<std::size_t>(i)]);
      REQUIRE(f.size() == 9);
      CHECK(close(f[0], r.times[k]));
      CHECK(std::stoul(f[1]) == static_cast<unsigned long>(i + 1));
      CHECK(close(f[2], r.truth[k][i]));
      CHECK(close(f[3], r.ekf[k][i]));
      CHECK(close(f[4], r.rem[k][i]));
      CHECK(close(f[7], r.true_inputs[k][i]));
      CHECK(close(f[8], r.rem_inputs[k][i]));
    }
  }
}

TEST_CASE("unsensed nodes leave the measurement field empty") {
  ScenarioConfig c = short_run(1, 0.01);
  c.sensors = {2, 9};
  const RunResult r = run_comparison(c);
  const fs::path dir = scratch_dir("sparse");
  emit_results(r, c, dir);
  const auto lines = read_lines(dir / "trajectory.csv");
  CHECK(split(lines[1])[6].empty());
  CHECK_FALSE(split(lines[3])[6].empty());
}

TEST_CASE("drift scenario has no input truth in the outputs") {
  const ScenarioConfig c = short_run(3, 0.02);
  const RunResult r = run_comparison(c);
  CHECK_FALSE(r.has_input_truth);
  const fs::path dir = scratch_dir("drift");
  emit_results(r, c, dir);
  CHECK(split(read_lines(dir / "trajectory.csv")[1])[7].empty());
  const auto summary = nlohmann::json::parse(std::ifstream(dir / "summary.json"));
  CHECK(summary.contains("notes"));
  CHECK_FALSE(summary["metrics"]["nodes"][0].contains("convergence_days"));
}

TEST_CASE("runs are reproducible for a seed") {
  const ScenarioConfig c = short_run(1, 0.05);
  const RunResult a = run_comparison(c);
  const RunResult b = run_comparison(c);
  REQUIRE(a.steps() == b.steps());
  for (std::size_t k = 0; k < a.steps(); ++k) {
    CHECK(a.rem[k] == b.rem[k]);
    CHECK(a.measurements[k] == b.measurements[k]);
  }
  ScenarioConfig other = c;
  other.seed = c.seed + 1;
  CHECK(run_comparison(other).measurements[0] != a.measurements[0]);
}

TEST_CASE("running RMSE starts at the first absolute error") {
  const RunResult r = run_comparison(short_run(1, 0.01));
  for (Eigen::Index i = 0; i < 16; ++i) {
    CHECK(r.rmse_ekf[0][i] == doctest::Approx(std::abs(r.ekf[0][i] - r.truth[0][i])).epsilon(1e-14));
  }
}

TEST_CASE("convergence time needs half a day inside the band") {
  ScenarioConfig c = build_scenario(1);
  RunResult r;
  r.node_count = 1;
  const std::size_t steps = 2000;
  for (std::size_t k = 0; k < steps; ++k) {
    r.times.push_back(static_cast<double>(k + 1) * 120.0);
    r.true_inputs.push_back(Vector::Constant(1, 1.0));
    r.rem_inputs.push_back(Vector::Constant(1, k < 500 ? 2.0 : (k < 600 ? 1.05 : (k < 700 ? 1.5 : 0.95))));
  }
  const auto t = convergence_time_days(r, 0, 120.0);
  REQUIRE(t.has_value());
  CHECK(*t == doctest::Approx(701.0 * 120.0 / kSecondsPerDay));
  r.has_input_truth = false;
  CHECK_FALSE(convergence_time_days(r, 0, 120.0).has_value());
  (void)c;
}

TEST_CASE("numerical failure keeps the partial record") {
  ScenarioConfig c = short_run(1, 0.05);
  c.column.max_head_change = 1e-12;
  try {
    run_comparison(c);
    FAIL("expected RunAborted");
  } catch (const RunAborted& e) {
    CHECK(e.code() == ErrorCode::kInstability);
    CHECK(e.partial().failure.has_value());
    CHECK(e.partial().steps() < c.step_count());
    CHECK(e.partial().node_count == 16);
  }
}

TEST_CASE("placement report text") {
  ScenarioConfig c = build_scenario(1);
  c.placement.augmented = false;
  const SensorRanking r = place_sensors(c);
  const std::string text = placement_report_text(r);
  CHECK(text.find("states only") != std::string::npos);
  CHECK(text.find("selected " + std::to_string(r.selected.size()) + " sensor(s)") != std::string::npos);
  const fs::path dir = scratch_dir("placement");
  emit_placement(r, c, dir);
  CHECK(fs::exists(dir / "placement.json"));
  CHECK(fs::exists(dir / "placement.txt"));
}
